#pragma once

#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/llm/provider.hpp"

namespace finstat::llm {

struct ScriptRule {
  enum class Match { contains, regex };
  Match match = Match::contains;
  std::string pattern;
  std::vector<std::string> responses;
  std::size_t line = 0;  // declaration line in the script file
};

// Deterministic offline provider driven by an ordered rule list.
//
// Rules are tried in declaration order against the bundle's concatenated
// prompt; the first match answers. A rule's responses are handed out in
// order on repeated matches, and the last one repeats once the list runs out.
//
// Script text format (line based):
//
//   # comment
//   @rule contains <substring>      or   @rule regex <ECMAScript pattern>
//   @response
//   reply line 1
//   reply line 2
//   @response
//   second reply
//   @end
//
// A reply line that must start with '@' is written with a doubled "@@". Reply
// text is the lines between markers joined by '\n'; trailing blank lines are
// dropped. Outside responses, blank lines and '#' lines are ignored.
class ScriptedProvider final : public Provider {
 public:
  explicit ScriptedProvider(std::vector<ScriptRule> rules, std::string id = "scripted");

  // Throws std::invalid_argument with a line number on malformed input.
  static std::vector<ScriptRule> parse(std::string_view script);
  static std::shared_ptr<ScriptedProvider> from_text(std::string_view script, std::string id = "scripted");
  static std::shared_ptr<ScriptedProvider> from_file(const std::string& path);

  std::string id() const override { return id_; }
  ModelReply complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) override;

  // Restores every cursor to the first response.
  void reset();
  const std::vector<ScriptRule>& rules() const { return rules_; }

 private:
  std::vector<ScriptRule> rules_;
  std::vector<std::regex> compiled_;
  std::vector<std::size_t> cursors_;
  std::string id_;
  std::mutex mutex_;
};

std::string format_script(const std::vector<ScriptRule>& rules);

}  // namespace finstat::llm
