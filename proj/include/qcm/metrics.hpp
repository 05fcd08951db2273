#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qcm/errors.hpp"

// Gameplay-metric events and their line serialization.
//
// One event per line, LF terminated:
//   timestamp_ms<TAB>seq<TAB>player_id<TAB>EVENT_ID<TAB>k=v;k=v...
// Booleans are `true`/`false`, integers base-10. The player_id field and
// string payload values percent-encode `%`, `;`, `=` and every byte below
// 0x20 (uppercase hex); the parser accepts exactly those escapes, so
// serialization is bijective: parsing a line and re-serializing the event
// reproduces the line byte for byte.

namespace qcm::metrics {

enum class EventId : std::uint8_t {
  GAME_START,
  GAME_END,
  GAME_PAUSE,
  MAIN_MENU_START,
  MAIN_MENU_QUIT,
  STORY_START,
  STORY_SCENE_START,
  STORY_SCENE_END,
  STORY_END_SEQUENCE,
  LABYRINTHE_START,
  LABYRINTHE_END,
  LABYRINTHE_LEVEL,
  LABYRINTHE_KEY,
  LABYRINTHE_BONUS,
  LABYRINTHE_DOOR,
  LABYRINTHE_BONUS_SPAWN,
  QUESTION_START,
  QUESTION_EXAMPLE,
  QUESTION_QCM,
  QUESTION_ANSWER,
  MOVE,  // optional position extension, not emitted by default
};

inline constexpr std::array<std::string_view, 21> kEventNames = {
    "GAME_START",       "GAME_END",          "GAME_PAUSE",
    "MAIN_MENU_START",  "MAIN_MENU_QUIT",    "STORY_START",
    "STORY_SCENE_START", "STORY_SCENE_END",  "STORY_END_SEQUENCE",
    "LABYRINTHE_START", "LABYRINTHE_END",    "LABYRINTHE_LEVEL",
    "LABYRINTHE_KEY",   "LABYRINTHE_BONUS",  "LABYRINTHE_DOOR",
    "LABYRINTHE_BONUS_SPAWN", "QUESTION_START", "QUESTION_EXAMPLE",
    "QUESTION_QCM",     "QUESTION_ANSWER",   "MOVE",
};

inline std::string_view event_name(EventId id) {
  return kEventNames[static_cast<std::size_t>(id)];
}

inline std::optional<EventId> event_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i)
    if (kEventNames[i] == name) return static_cast<EventId>(i);
  return std::nullopt;
}

using Value = std::variant<bool, std::int64_t, std::string>;

// Ordered key -> value map; serialization preserves entry order.
struct Payload {
  std::vector<std::pair<std::string, Value>> entries;

  Payload() = default;
  Payload(std::initializer_list<std::pair<std::string, Value>> init) : entries(init) {}

  Payload& add(std::string key, Value v) {
    entries.emplace_back(std::move(key), std::move(v));
    return *this;
  }

  const Value* find(std::string_view key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  bool operator==(const Payload&) const = default;
};

struct MetricEvent {
  std::int64_t timestamp_ms = 0;
  std::uint64_t seq = 0;
  std::string player_id;
  EventId event_id = EventId::GAME_START;
  Payload payload;

  bool operator==(const MetricEvent&) const = default;
};

namespace detail {

enum class FieldType { boolean, integer, text };

struct RequiredField {
  std::string_view key;
  FieldType type;
};

// Per-event payload contract. Events outside this table carry value=true.
inline const std::vector<RequiredField>& required_fields(EventId id) {
  static const std::vector<RequiredField> kValue = {{"value", FieldType::boolean}};
  static const std::vector<RequiredField> kScene = {{"scene", FieldType::integer}};
  static const std::vector<RequiredField> kLevel = {{"level", FieldType::integer}};
  static const std::vector<RequiredField> kImage = {{"image", FieldType::text}};
  static const std::vector<RequiredField> kAnswer = {{"card", FieldType::text},
                                                     {"choice", FieldType::integer},
                                                     {"correct", FieldType::boolean}};
  static const std::vector<RequiredField> kMove = {{"x", FieldType::integer},
                                                   {"y", FieldType::integer}};
  switch (id) {
    case EventId::STORY_SCENE_START:
    case EventId::STORY_SCENE_END: return kScene;
    case EventId::LABYRINTHE_LEVEL: return kLevel;
    case EventId::QUESTION_EXAMPLE: return kImage;
    case EventId::QUESTION_ANSWER: return kAnswer;
    case EventId::MOVE: return kMove;
    default: return kValue;
  }
}

// Every value-carrying event except GAME_PAUSE must carry value=true.
inline bool value_must_be_true(EventId id) {
  switch (id) {
    case EventId::GAME_PAUSE:
    case EventId::STORY_SCENE_START:
    case EventId::STORY_SCENE_END:
    case EventId::LABYRINTHE_LEVEL:
    case EventId::QUESTION_EXAMPLE:
    case EventId::QUESTION_ANSWER:
    case EventId::MOVE: return false;
    default: return true;
  }
}

inline bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

inline bool needs_escape(unsigned char c) {
  return c < 0x20 || c == '%' || c == ';' || c == '=';
}

inline void append_escaped(std::string& out, std::string_view raw) {
  static constexpr char hex[] = "0123456789ABCDEF";
  for (unsigned char c : raw) {
    if (needs_escape(c)) {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
}

// Strict inverse of append_escaped: only the escapes the serializer emits
// are accepted, so there is exactly one encoding per string.
inline std::optional<std::string> unescape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (c == '%') {
      if (i + 2 >= raw.size()) return std::nullopt;
      auto hexval = [](char h) -> int {
        if (h >= '0' && h <= '9') return h - '0';
        if (h >= 'A' && h <= 'F') return h - 'A' + 10;
        return -1;
      };
      const int hi = hexval(raw[i + 1]);
      const int lo = hexval(raw[i + 2]);
      if (hi < 0 || lo < 0) return std::nullopt;
      const unsigned char decoded = static_cast<unsigned char>(hi * 16 + lo);
      if (!needs_escape(decoded)) return std::nullopt;  // non-canonical escape
      out.push_back(static_cast<char>(decoded));
      i += 2;
    } else {
      if (needs_escape(c)) return std::nullopt;  // raw byte that must be escaped
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

// Integer grammar: optional '-', no leading zeros ("0" itself is fine).
inline std::optional<std::int64_t> parse_strict_int(std::string_view s, bool allow_negative) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s.front() == '-') {
    if (!allow_negative || s.size() == 1) return std::nullopt;
    neg = true;
    s.remove_prefix(1);
  }
  if (s.size() > 1 && s.front() == '0') return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    if (v > (INT64_MAX - (c - '0')) / 10) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return neg ? -v : v;
}

}  // namespace detail

// Checks the event against the schema contract; throws ValidationError.
inline void validate_event(const MetricEvent& e) {
  if (e.timestamp_ms < 0) throw ValidationError("negative timestamp");
  if (e.player_id.empty()) throw ValidationError("empty player_id");
  const auto& required = detail::required_fields(e.event_id);
  for (const auto& field : required) {
    const Value* v = e.payload.find(field.key);
    if (!v)
      throw ValidationError(std::string(event_name(e.event_id)) + ": missing payload key '" +
                            std::string(field.key) + "'");
    const bool type_ok =
        (field.type == detail::FieldType::boolean && std::holds_alternative<bool>(*v)) ||
        (field.type == detail::FieldType::integer && std::holds_alternative<std::int64_t>(*v)) ||
        (field.type == detail::FieldType::text && std::holds_alternative<std::string>(*v));
    if (!type_ok)
      throw ValidationError(std::string(event_name(e.event_id)) + ": payload key '" +
                            std::string(field.key) + "' has wrong type");
  }
  if (detail::value_must_be_true(e.event_id)) {
    if (!std::get<bool>(*e.payload.find("value")))
      throw ValidationError(std::string(event_name(e.event_id)) + ": value must be true");
  }
  if (const Value* scene = e.payload.find("scene");
      scene && std::holds_alternative<std::int64_t>(*scene) && std::get<std::int64_t>(*scene) < 1)
    throw ValidationError("scene number must be >= 1");
  if (const Value* level = e.payload.find("level");
      level && std::holds_alternative<std::int64_t>(*level) && std::get<std::int64_t>(*level) < 1)
    throw ValidationError("level number must be >= 1");
  if (e.event_id == EventId::QUESTION_ANSWER &&
      std::get<std::int64_t>(*e.payload.find("choice")) < 1)
    throw ValidationError("choice number must be >= 1");

  for (std::size_t i = 0; i < e.payload.entries.size(); ++i) {
    const auto& [key, value] = e.payload.entries[i];
    if (!detail::valid_key(key))
      throw ValidationError("bad payload key '" + key + "'");
    for (std::size_t j = i + 1; j < e.payload.entries.size(); ++j)
      if (e.payload.entries[j].first == key)
        throw ValidationError("duplicate payload key '" + key + "'");
    const bool is_required = std::any_of(required.begin(), required.end(),
                                         [&](const auto& f) { return f.key == key; });
    if (!is_required && std::holds_alternative<std::string>(value))
      throw ValidationError("extra payload key '" + key + "' must be boolean or integer");
  }
}

inline std::string serialize_event(const MetricEvent& e) {
  validate_event(e);
  std::string line;
  line.reserve(64);
  line += std::to_string(e.timestamp_ms);
  line += '\t';
  line += std::to_string(e.seq);
  line += '\t';
  detail::append_escaped(line, e.player_id);
  line += '\t';
  line += event_name(e.event_id);
  line += '\t';
  bool first = true;
  for (const auto& [key, value] : e.payload.entries) {
    if (!first) line += ';';
    first = false;
    line += key;
    line += '=';
    if (const bool* b = std::get_if<bool>(&value)) {
      line += *b ? "true" : "false";
    } else if (const std::int64_t* i = std::get_if<std::int64_t>(&value)) {
      line += std::to_string(*i);
    } else {
      detail::append_escaped(line, std::get<std::string>(value));
    }
  }
  line += '\n';
  return line;
}

struct ParseError {
  std::size_t position = 0;  // byte offset into the line
  std::string reason;

  bool operator==(const ParseError&) const = default;
};

using ParseResult = std::variant<MetricEvent, ParseError>;

// Parses one log line (trailing LF optional). Exact inverse of
// serialize_event on valid lines; otherwise a positioned ParseError.
inline ParseResult parse_line(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos)
    return ParseError{line.find('\n'), "embedded newline"};

  // Field boundaries.
  std::array<std::string_view, 5> fields;
  std::array<std::size_t, 5> offsets{};
  {
    std::size_t start = 0;
    int n = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        if (n == 5) return ParseError{i, "bad field count: more than 5 fields"};
        offsets[static_cast<std::size_t>(n)] = start;
        fields[static_cast<std::size_t>(n)] = line.substr(start, i - start);
        ++n;
        start = i + 1;
      }
    }
    if (n != 5)
      return ParseError{line.size(), "bad field count: expected 5 fields, got " +
                                         std::to_string(n)};
  }
  for (std::size_t f = 0; f < 5; ++f) {
    for (std::size_t i = 0; i < fields[f].size(); ++i)
      if (static_cast<unsigned char>(fields[f][i]) < 0x20)
        return ParseError{offsets[f] + i, "raw control byte"};
  }

  MetricEvent e;
  if (const auto ts = detail::parse_strict_int(fields[0], false))
    e.timestamp_ms = *ts;
  else
    return ParseError{offsets[0], "non-numeric timestamp"};
  if (const auto seq = detail::parse_strict_int(fields[1], false))
    e.seq = static_cast<std::uint64_t>(*seq);
  else
    return ParseError{offsets[1], "non-numeric seq"};
  const auto player = detail::unescape(fields[2]);
  if (!player) return ParseError{offsets[2], "bad escape in player_id"};
  if (player->empty()) return ParseError{offsets[2], "empty player_id"};
  e.player_id = *player;
  const auto id = event_from_name(fields[3]);
  if (!id) return ParseError{offsets[3], "unknown event '" + std::string(fields[3]) + "'"};
  e.event_id = *id;

  // Payload tokens.
  const std::string_view payload = fields[4];
  if (payload.empty()) return ParseError{offsets[4], "empty payload"};
  const auto& required = detail::required_fields(e.event_id);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= payload.size(); ++i) {
    if (i != payload.size() && payload[i] != ';') continue;
    const std::string_view token = payload.substr(start, i - start);
    const std::size_t token_off = offsets[4] + start;
    const std::size_t eq = token.find('=');
    if (eq == std::string_view::npos || token.find('=', eq + 1) != std::string_view::npos)
      return ParseError{token_off, "payload token is not key=value"};
    const std::string_view key = token.substr(0, eq);
    const std::string_view raw = token.substr(eq + 1);
    if (!detail::valid_key(key))
      return ParseError{token_off, "bad payload key '" + std::string(key) + "'"};

    const detail::RequiredField* spec = nullptr;
    for (const auto& f : required)
      if (f.key == key) spec = &f;

    Value value;
    if (spec && spec->type == detail::FieldType::text) {
      const auto s = detail::unescape(raw);
      if (!s) return ParseError{token_off + eq + 1, "bad escape in value"};
      value = *s;
    } else if (raw == "true") {
      value = true;
    } else if (raw == "false") {
      value = false;
    } else if (const auto n = detail::parse_strict_int(raw, true)) {
      value = *n;
    } else {
      return ParseError{token_off + eq + 1,
                        "bad value for key '" + std::string(key) + "'"};
    }
    e.payload.entries.emplace_back(std::string(key), std::move(value));
    start = i + 1;
  }

  try {
    validate_event(e);
  } catch (const ValidationError& ve) {
    return ParseError{offsets[4], std::string("contract: ") + ve.what()};
  }
  return e;
}

struct Diagnostic {
  std::size_t line_number = 0;  // 1-based
  ParseError error;
};

struct LogDocument {
  std::vector<MetricEvent> events;  // sorted by (player_id, seq)
  std::string source;
};

struct ReadResult {
  LogDocument doc;
  std::vector<Diagnostic> diagnostics;
};

inline void sort_events(std::vector<MetricEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const MetricEvent& a, const MetricEvent& b) {
    if (a.player_id != b.player_id) return a.player_id < b.player_id;
    return a.seq < b.seq;
  });
}

// Loads every parseable event, sorted by (player_id, seq); every rejected
// line becomes a diagnostic, nothing is silently dropped.
inline ReadResult read_log(std::istream& in, std::string source_label = "") {
  ReadResult result;
  result.doc.source = std::move(source_label);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ParseResult parsed = parse_line(line);
    if (MetricEvent* e = std::get_if<MetricEvent>(&parsed))
      result.doc.events.push_back(std::move(*e));
    else
      result.diagnostics.push_back({line_no, std::get<ParseError>(parsed)});
  }
  sort_events(result.doc.events);
  return result;
}

// Stream-level ordering problems: duplicate or non-increasing seq, or a
// timestamp that goes backwards within one player. Expects a sorted doc.
inline std::vector<std::string> order_violations(const LogDocument& doc) {
  std::vector<std::string> problems;
  for (std::size_t i = 1; i < doc.events.size(); ++i) {
    const MetricEvent& prev = doc.events[i - 1];
    const MetricEvent& cur = doc.events[i];
    if (prev.player_id != cur.player_id) continue;
    if (cur.seq == prev.seq)
      problems.push_back("player " + cur.player_id + ": duplicate seq " +
                         std::to_string(cur.seq));
    if (cur.timestamp_ms < prev.timestamp_ms)
      problems.push_back("player " + cur.player_id + ": timestamp decreases at seq " +
                         std::to_string(cur.seq));
  }
  return problems;
}

}  // namespace qcm::metrics
