#include "finstat/llm/scripted.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>

#include "finstat/core/text.hpp"

namespace finstat::llm {
namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules, std::string id)
    : rules_(std::move(rules)), cursors_(rules_.size(), 0), id_(std::move(id)) {
  for (const auto& r : rules_) {
    if (r.responses.empty()) {
      throw std::invalid_argument("script rule at line " + std::to_string(r.line) + " has no responses");
    }
    compiled_.emplace_back(r.match == ScriptRule::Match::regex ? std::regex(r.pattern) : std::regex());
  }
}

std::vector<ScriptRule> ScriptedProvider::parse(std::string_view script) {
  std::vector<ScriptRule> rules;
  std::optional<ScriptRule> current;
  std::vector<std::string> body;
  bool in_response = false;
  const auto fail = [](std::size_t line, const std::string& msg) {
    throw std::invalid_argument("script line " + std::to_string(line) + ": " + msg);
  };
  const auto close_response = [&] {
    while (!body.empty() && text::trim(body.back()).empty()) body.pop_back();
    if (in_response) current->responses.push_back(join_lines(body));
    body.clear();
    in_response = false;
  };

  const auto lines = text::split_lines(script);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.starts_with("@@")) {
      if (!in_response) fail(line_no, "text outside @response");
      body.push_back(line.substr(1));
      continue;
    }
    if (line.starts_with("@")) {
      const auto space = line.find(' ');
      const auto directive = line.substr(0, space);
      const auto arg = space == std::string::npos ? std::string() : line.substr(space + 1);
      if (directive == "@rule") {
        if (current) fail(line_no, "@rule before @end of the previous rule");
        const auto kind_end = arg.find(' ');
        const auto kind = arg.substr(0, kind_end);
        const auto pattern = kind_end == std::string::npos ? std::string() : arg.substr(kind_end + 1);
        if (pattern.empty()) fail(line_no, "@rule needs a matcher and a pattern");
        ScriptRule r;
        r.line = line_no;
        r.pattern = pattern;
        if (kind == "contains") {
          r.match = ScriptRule::Match::contains;
        } else if (kind == "regex") {
          r.match = ScriptRule::Match::regex;
          try {
            std::regex test(pattern);
          } catch (const std::regex_error& e) {
            fail(line_no, std::string("bad regex: ") + e.what());
          }
        } else {
          fail(line_no, "unknown matcher '" + kind + "'");
        }
        current = std::move(r);
      } else if (directive == "@response") {
        if (!current) fail(line_no, "@response outside a rule");
        close_response();
        in_response = true;
      } else if (directive == "@end") {
        if (!current) fail(line_no, "@end without @rule");
        close_response();
        if (current->responses.empty()) fail(line_no, "rule has no @response");
        rules.push_back(std::move(*current));
        current.reset();
      } else {
        fail(line_no, "unknown directive '" + directive + "'");
      }
      continue;
    }
    if (in_response) {
      body.push_back(line);
    } else if (!text::trim(line).empty() && !line.starts_with("#")) {
      fail(line_no, "text outside @response");
    }
  }
  if (current) fail(lines.size(), "missing @end");
  return rules;
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_text(std::string_view script, std::string id) {
  return std::make_shared<ScriptedProvider>(parse(script), std::move(id));
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read script file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_text(buf.str(), "scripted");
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

ModelReply ScriptedProvider::complete(const PromptBundle& bundle, std::chrono::milliseconds) {
  const auto start = std::chrono::steady_clock::now();
  const auto prompt = bundle.concatenated();
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    const bool hit = r.match == ScriptRule::Match::contains ? prompt.find(r.pattern) != std::string::npos
                                                            : std::regex_search(prompt, compiled_[i]);
    if (!hit) continue;
    auto& cursor = cursors_[i];
    const auto& text = r.responses[std::min(cursor, r.responses.size() - 1)];
    if (cursor < r.responses.size()) ++cursor;
    ModelReply reply;
    reply.text = text;
    reply.provider_id = id_;
    reply.usage = {approximate_tokens(prompt), approximate_tokens(text)};
    reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return reply;
  }
  throw LlmError(ErrorKind::no_script_match, id_, "no rule matches the prompt");
}

void ScriptedProvider::reset() {
  std::lock_guard lock(mutex_);
  std::fill(cursors_.begin(), cursors_.end(), 0);
}

std::string format_script(const std::vector<ScriptRule>& rules) {
  std::string out;
  for (const auto& r : rules) {
    out += "@rule ";
    out += r.match == ScriptRule::Match::contains ? "contains " : "regex ";
    out += r.pattern + "\n";
    for (const auto& resp : r.responses) {
      out += "@response\n";
      for (const auto& line : text::split_lines(resp)) {
        out += line.starts_with("@") ? "@" + line : line;
        out += '\n';
      }
    }
    out += "@end\n";
  }
  return out;
}

}  // namespace finstat::llm
