#pragma once

// HTTP transport for the remote judge. Wire contract:
//   POST <endpoint>  {prompt_kind, prompt_version, prompt, metadata, payload}
//   reply            {raw_text, parsed_value?}
// The client prefers parsed_value when present, otherwise parses raw_text
// (last numeric token for pair prompts, embedded JSON object for keyword
// prompts). Transport failures and unparsable replies raise JudgeError with
// the raw reply attached; they are never coerced into a score.
//
// Verdicts are cached process-wide under (normalized rendered a, normalized
// rendered b, prompt version, endpoint) with single-flight semantics, so a
// given key is computed at most once per process. In-flight requests are
// bounded by a counting semaphore (JudgeConfig.max_inflight).

#include <cstdlib>
#include <future>
#include <map>
#include <mutex>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "traceval/judge.hpp"
#include "traceval/prompts.hpp"

namespace traceval::remote {

inline constexpr const char* kTokenEnvVar = "TRACEVAL_JUDGE_TOKEN";

struct RemoteReply {
  std::string raw_text;
  nlohmann::json parsed_value;  // null when the server sent none
};

namespace detail {

template <class V>
class SingleFlight {
 public:
  // Runs compute() for the first caller of a key; concurrent and later
  // callers share the stored result. `fresh` tells the caller whether it
  // did the work. Failed computations are evicted so retries are possible.
  template <class F>
  V get_or_compute(const std::string& key, bool& fresh, F&& compute) {
    std::promise<V> promise;
    std::shared_future<V> fut;
    bool leader = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it == map_.end()) {
        fut = promise.get_future().share();
        map_.emplace(key, fut);
        leader = true;
      } else {
        fut = it->second;
      }
    }
    if (leader) {
      fresh = true;
      try {
        V value = compute();
        promise.set_value(value);
        return value;
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(mu_);
          map_.erase(key);
        }
        promise.set_exception(std::current_exception());
        throw;
      }
    }
    fresh = false;
    return fut.get();
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    map_.clear();
  }

 private:
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<V>> map_;
};

inline SingleFlight<JudgeVerdict>& pair_cache() {
  static SingleFlight<JudgeVerdict> cache;
  return cache;
}

inline SingleFlight<std::map<std::string, bool>>& keyword_cache() {
  static SingleFlight<std::map<std::string, bool>> cache;
  return cache;
}

struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/";
};

inline Endpoint parse_endpoint(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0)
    throw JudgeError("remote judge endpoint must start with http://: " + url);
  std::string rest = url.substr(prefix.size());
  Endpoint ep;
  size_t slash = rest.find('/');
  std::string host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
  size_t colon = host_port.find(':');
  if (colon == std::string::npos) {
    ep.host = host_port;
  } else {
    ep.host = host_port.substr(0, colon);
    ep.port = std::atoi(host_port.c_str() + colon + 1);
  }
  if (ep.host.empty() || ep.port <= 0)
    throw JudgeError("cannot parse remote judge endpoint: " + url);
  return ep;
}

// Last numeric token in a free-form reply; chain-of-thought replies end
// with the verdict line.
inline std::optional<double> last_number(const std::string& text) {
  std::optional<double> found;
  for (size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    bool starts_number =
        std::isdigit(c) ||
        ((c == '-' || c == '.') && i + 1 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[i + 1])));
    if (!starts_number) continue;
    char* end = nullptr;
    double v = std::strtod(text.c_str() + i, &end);
    if (end && end != text.c_str() + i) {
      found = v;
      i = size_t(end - text.c_str()) - 1;
    }
  }
  return found;
}

}  // namespace detail

class HttpRemoteBackend : public RemoteBackend {
 public:
  explicit HttpRemoteBackend(JudgeConfig cfg)
      : cfg_(std::move(cfg)), inflight_(cfg_.max_inflight) {
    if (cfg_.endpoint.empty())
      throw JudgeError("remote judge requires --endpoint");
    detail::parse_endpoint(cfg_.endpoint);  // fail fast on malformed urls
  }

  JudgeVerdict pair_verdict(const Action& a, const Action& b) override {
    if (!cfg_.cache_enabled) return fetch_pair(a, b);
    const std::string key = pair_key(a, b);
    bool fresh = false;
    JudgeVerdict v = detail::pair_cache().get_or_compute(
        key, fresh, [&] { return fetch_pair(a, b); });
    if (!fresh) v.source = JudgeSource::Cache;
    return v;
  }

  std::map<std::string, bool> keywords(
      const std::string& answer, const std::vector<std::string>& reqs) override {
    if (!cfg_.cache_enabled) return fetch_keywords(answer, reqs);
    std::string key = "keywords\x1f" + normalize_text(answer);
    for (const std::string& r : reqs) key += "\x1f" + normalize_text(r);
    key += "\x1f" + cfg_.prompt_version + "\x1f" + cfg_.endpoint;
    bool fresh = false;
    return detail::keyword_cache().get_or_compute(
        key, fresh, [&] { return fetch_keywords(answer, reqs); });
  }

  // Exposed for tests and tooling: issue one raw prompt of any kind.
  RemoteReply raw_query(const std::string& prompt_kind,
                        const std::string& prompt,
                        const nlohmann::json& payload) {
    return post(prompt_kind, prompt, payload);
  }

 private:
  std::string pair_key(const Action& a, const Action& b) const {
    return signature(normalize_action(a)) + "\x1f" +
           signature(normalize_action(b)) + "\x1f" + cfg_.prompt_version +
           "\x1f" + cfg_.endpoint;
  }

  JudgeVerdict fetch_pair(const Action& a, const Action& b) {
    const std::string human = render_for_judge(a);
    const std::string agent = render_for_judge(b);
    const std::string prompt = prompts::fill(
        prompts::pair_prompt(), {{"human_action", human}, {"agent_action", agent}});
    RemoteReply reply = post(
        "pair", prompt,
        nlohmann::json{{"human_action", human}, {"agent_action", agent}});
    std::optional<double> score;
    if (reply.parsed_value.is_number()) {
      score = reply.parsed_value.get<double>();
    } else {
      score = detail::last_number(reply.raw_text);
    }
    if (!score)
      throw JudgeError("remote judge reply carries no numeric verdict",
                       reply.raw_text);
    JudgeVerdict v;
    v.score = *score;
    v.equivalent = v.score >= cfg_.threshold;
    v.explanation = reply.raw_text;
    v.source = JudgeSource::Remote;
    return v;
  }

  std::map<std::string, bool> fetch_keywords(
      const std::string& answer, const std::vector<std::string>& reqs) {
    std::string req_block;
    for (const std::string& r : reqs) req_block += "- " + r + "\n";
    const std::string prompt = prompts::fill(
        prompts::keywords_prompt(),
        {{"requirements", req_block}, {"answer", answer}});
    RemoteReply reply =
        post("keywords", prompt,
             nlohmann::json{{"requirements", reqs}, {"answer", answer}});

    nlohmann::json obj;
    if (reply.parsed_value.is_object()) {
      obj = reply.parsed_value;
    } else {
      size_t open = reply.raw_text.find('{');
      size_t close = reply.raw_text.rfind('}');
      if (open == std::string::npos || close == std::string::npos || close < open)
        throw JudgeError("remote judge reply carries no keyword object",
                         reply.raw_text);
      obj = nlohmann::json::parse(
          reply.raw_text.substr(open, close - open + 1), nullptr, false);
      if (obj.is_discarded() || !obj.is_object())
        throw JudgeError("remote judge keyword object does not parse",
                         reply.raw_text);
    }

    auto truthy = [](const nlohmann::json& v) -> std::optional<bool> {
      if (v.is_boolean()) return v.get<bool>();
      if (v.is_number()) return v.get<double>() != 0.0;
      if (v.is_string()) {
        std::string s = normalize_text(v.get<std::string>());
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
      }
      return std::nullopt;
    };

    std::map<std::string, bool> out;
    for (const std::string& req : reqs) {
      std::optional<bool> value;
      if (obj.contains(req)) {
        value = truthy(obj.at(req));
      } else {
        for (auto it = obj.begin(); it != obj.end() && !value; ++it)
          if (text_equal_normalized(it.key(), req)) value = truthy(it.value());
      }
      if (!value)
        throw JudgeError("remote judge reply misses keyword '" + req + "'",
                         reply.raw_text);
      out[req] = *value;
    }
    return out;
  }

  RemoteReply post(const std::string& prompt_kind, const std::string& prompt,
                   const nlohmann::json& payload) {
    nlohmann::json body{
        {"prompt_kind", prompt_kind},
        {"prompt_version", cfg_.prompt_version},
        {"prompt", prompt},
        {"payload", payload},
        {"metadata",
         {{"model", cfg_.model.model},
          {"temperature", cfg_.model.temperature},
          {"top_p", cfg_.model.top_p},
          {"max_pair_window", cfg_.max_pair_window}}},
    };

    detail::Endpoint ep = detail::parse_endpoint(cfg_.endpoint);
    inflight_.acquire();
    httplib::Result res = [&] {
      httplib::Client client(ep.host, ep.port);
      client.set_connection_timeout(5, 0);
      client.set_read_timeout(30, 0);
      httplib::Headers headers;
      if (!cfg_.auth_token.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.auth_token);
      return client.Post(ep.path, headers, body.dump(), "application/json");
    }();
    inflight_.release();

    if (!res)
      throw JudgeError("remote judge transport error: " +
                       httplib::to_string(res.error()));
    if (res->status != 200)
      throw JudgeError(
          "remote judge endpoint returned status " + std::to_string(res->status),
          res->body);
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() ||
        !parsed.contains("raw_text") || !parsed.at("raw_text").is_string())
      throw JudgeError("remote judge reply is not the expected object",
                       res->body);
    RemoteReply reply;
    reply.raw_text = parsed.at("raw_text").get<std::string>();
    if (parsed.contains("parsed_value")) reply.parsed_value = parsed.at("parsed_value");
    return reply;
  }

  JudgeConfig cfg_;
  std::counting_semaphore<4096> inflight_;
};

// Single construction point: the config decides the backend, callers do not
// change.
inline Judge make_judge(JudgeConfig cfg) {
  if (cfg.backend == JudgeBackendKind::Remote) {
    if (cfg.auth_token.empty()) {
      if (const char* tok = std::getenv(kTokenEnvVar)) cfg.auth_token = tok;
    }
    auto backend = std::make_shared<HttpRemoteBackend>(cfg);
    return Judge(std::move(cfg), std::move(backend));
  }
  return Judge(std::move(cfg));
}

// Test hygiene: the verdict cache is process-global.
inline void clear_remote_caches() {
  detail::pair_cache().clear();
  detail::keyword_cache().clear();
}

}  // namespace traceval::remote
