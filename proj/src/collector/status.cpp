#include <cctype>
#include <fstream>
#include <regex>

#include "chanaudit/collector.hpp"
#include "chanaudit/csv.hpp"
#include "chanaudit/data.hpp"

namespace chanaudit {

StatusRules StatusRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open status rules " + path.string());
  auto table = csv::Table::read(in);
  std::vector<Rule> rules;
  for (const auto& row : table.rows()) {
    const auto reason_text = table.require(row, "reason");
    auto reason = parse_status_reason(reason_text);
    if (!reason || *reason == StatusReason::available)
      throw csv::ParseError(row.line, "unknown removal reason '" + std::string(reason_text) + "'");
    std::string pattern(table.require(row, "pattern"));
    try {
      rules.push_back({*reason, pattern, std::regex(pattern, std::regex::ECMAScript | std::regex::icase)});
    } catch (const std::regex_error& e) {
      throw csv::ParseError(row.line, "bad pattern '" + pattern + "': " + e.what());
    }
  }
  return StatusRules(std::move(rules));
}

const StatusRules& StatusRules::defaults() {
  static const StatusRules rules = load(data_file("status_messages.csv"));
  return rules;
}

std::optional<StatusReason> StatusRules::match(std::string_view message) const {
  for (const auto& r : rules_)
    if (std::regex_search(message.begin(), message.end(), r.re)) return r.reason;
  return std::nullopt;
}

namespace {

std::string strip_tags(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') {
      in_tag = true;
      out.push_back(' ');
    } else if (c == '>') {
      in_tag = false;
    } else if (!in_tag) {
      out.push_back(c);
    }
  }
  std::string collapsed;
  bool space = true;
  for (char c : out) {
    const bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (ws) {
      if (!space) collapsed.push_back(' ');
      space = true;
    } else {
      collapsed.push_back(c);
      space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

}  // namespace

std::string html_unescape(std::string s) {
  static const std::pair<const char*, const char*> entities[] = {
      {"&#39;", "'"}, {"&apos;", "'"}, {"&quot;", "\""}, {"&lt;", "<"}, {"&gt;", ">"}, {"&amp;", "&"}};
  for (const auto& [from, to] : entities) {
    std::size_t pos = 0;
    const std::string_view f(from);
    while ((pos = s.find(f, pos)) != std::string::npos) {
      s.replace(pos, f.size(), to);
      pos += std::string_view(to).size();
    }
  }
  return s;
}

std::optional<std::string> extract_status_message(std::string_view html) {
  static const std::regex banner_class(R"re(class="[^"<>]*\b(alert-message|error-message|unavailable-reason)\b[^"<>]*")re",
                                       std::regex::icase);
  static const std::regex json_reason(R"re("playabilityStatus"\s*:\s*\{[^{}]*"reason"\s*:\s*"((?:[^"\\]|\\.)*)")re");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(html.begin(), html.end(), m, banner_class)) {
    const auto attr = static_cast<std::size_t>(m.position(0));
    const auto open = html.rfind('<', attr);
    const auto body = html.find('>', attr);
    if (open != std::string_view::npos && body != std::string_view::npos) {
      std::size_t name_end = open + 1;
      while (name_end < html.size() && (std::isalnum(static_cast<unsigned char>(html[name_end])) || html[name_end] == '-'))
        ++name_end;
      const std::string close = "</" + std::string(html.substr(open + 1, name_end - open - 1));
      auto stop = html.find(close, body);
      if (stop == std::string_view::npos) stop = html.size();
      auto text = html_unescape(strip_tags(html.substr(body + 1, stop - body - 1)));
      if (!text.empty()) return text;
    }
  }
  if (std::regex_search(html.begin(), html.end(), m, json_reason)) return html_unescape(m[1].str());
  return std::nullopt;
}

StatusReport parse_status(const RawPage& page, const StatusRules& rules) {
  if (auto banner = extract_status_message(page.body)) {
    auto reason = rules.match(*banner).value_or(StatusReason::other_unavailable);
    return StatusReport::unavailable(reason, std::move(banner));
  }
  const auto text = html_unescape(strip_tags(page.body));
  if (auto reason = rules.match(text)) return StatusReport::unavailable(*reason, text.substr(0, 300));
  if (page.http_status >= 200 && page.http_status < 300) return StatusReport::ok();
  std::optional<std::string> raw;
  if (!text.empty()) raw = text.substr(0, 300);
  return StatusReport::unavailable(StatusReason::other_unavailable, std::move(raw));
}

}  // namespace chanaudit
