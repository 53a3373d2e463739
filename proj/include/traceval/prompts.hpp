#pragma once

// Versioned judge prompt templates. The texts under resources/prompts/ are
// the normative copies; the constants here are the embedded v1 defaults and
// a unit test pins the two against each other. Placeholders use {name}.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace traceval::prompts {

struct PromptTemplate {
  std::string name;
  std::string version;
  std::string text;
};

inline const PromptTemplate& pair_prompt() {
  static const PromptTemplate t{
      "pair", "v1",
      R"(You are comparing a reference action taken by a human against an action taken by an autonomous web agent while both work on the same website task.

Decide whether the two actions are semantically equivalent: they attempt the same operation on the same target element or have the same effect on the page, even when phrased differently.

Rules:
- Ignore formatting differences such as capitalization, punctuation or numeric element ids; 'Design' and 'design' describe the same link.
- Concrete values matter: actions that operate on different dates, different search strings or different items are not equivalent.
- The agent action may carry metadata such as bracketed element ids; judge the underlying intent.

Think step by step, then answer with a single number on the final line: 1 if the actions are equivalent, 0 if they are not.

Example:
Human action: search for flights
Agent action: find flights
Reasoning: both issue the same query intent against the same site feature.
Output: 1

Human action: {human_action}
Agent action: {agent_action}
)"};
  return t;
}

inline const PromptTemplate& match_prompt() {
  static const PromptTemplate t{
      "match", "v1",
      R"(You are aligning a human reference trajectory with a web agent trajectory recorded on the same task.

Match reference steps to agent steps in order:
- Walk the reference steps from first to last.
- For each reference step, find the first semantically equivalent agent step among the remaining agent steps after the previously matched one, and pair them.
- Each reference step matches at most once; a reference step that occurs k times needs k distinct agent steps.
- Steps with no counterpart stay unmatched.

Report one line per reference step, either "gold i -> agent j" or "gold i -> unmatched".

Reference steps:
{gold_steps}

Agent steps:
{agent_steps}
)"};
  return t;
}

inline const PromptTemplate& repetition_prompt() {
  static const PromptTemplate t{
      "repetition", "v1",
      R"(You are counting repeated actions in a web agent trajectory.

Only count actions that repeat the action immediately before them; two equal actions separated by a different action are not repeats. Report how many actions belong to such consecutive repetitions.

Trajectory:
{trajectory}

Answer with a single number on the final line.
)"};
  return t;
}

inline const PromptTemplate& keywords_prompt() {
  static const PromptTemplate t{
      "keywords", "v1",
      R"(You are checking which required facts appear in a web agent's final answer.

For every keyword below, decide whether the answer states it. Allow paraphrases and formatting differences; missing or contradicted facts count as absent.

Keywords:
{requirements}

Final answer:
{answer}

Reply with a JSON object mapping every keyword to true or false, for example {"keyword1": true, "keyword2": false}. Output only the JSON object.
)"};
  return t;
}

inline const PromptTemplate& prompt_for_kind(const std::string& kind) {
  if (kind == "pair") return pair_prompt();
  if (kind == "match") return match_prompt();
  if (kind == "repetition") return repetition_prompt();
  if (kind == "keywords") return keywords_prompt();
  throw std::invalid_argument("unknown prompt kind: " + kind);
}

// Replace {name} placeholders. Unknown placeholders are left alone so the
// literal JSON example braces in templates survive.
inline std::string fill(const PromptTemplate& tpl,
                        const std::map<std::string, std::string>& vars) {
  std::string out = tpl.text;
  for (const auto& [key, value] : vars) {
    const std::string needle = "{" + key + "}";
    size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return out;
}

// Resource-file naming convention: <name>_<version>.txt
inline std::string resource_filename(const PromptTemplate& tpl) {
  return tpl.name + "_" + tpl.version + ".txt";
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace traceval::prompts
