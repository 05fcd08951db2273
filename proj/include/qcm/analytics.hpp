#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qcm/cards.hpp"
#include "qcm/errors.hpp"
#include "qcm/games.hpp"
#include "qcm/metrics.hpp"
#include "qcm/stats.hpp"

// Post-hoc computations over metric logs: game-session reconstruction,
// per-student and per-card statistics, context totals against worksheet
// answer records, success-versus-time points and the bonus capture rate.
// Everything is pure over a sorted LogDocument.

namespace qcm::analytics {

using games::GameKind;
using games::game_kind_label;

struct SessionSegment {
  std::string player_id;
  GameKind game_kind = GameKind::narratif;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  bool completed = false;  // reached the game's end sequence

  bool operator==(const SessionSegment&) const = default;
};

struct SessionsResult {
  std::vector<SessionSegment> segments;
  std::vector<std::string> diagnostics;
};

// One segment per STORY_START / LABYRINTHE_START, closed by the matching
// end event (completed) or, failing that, by the next start or GAME_END
// (incomplete). Orphan end events become diagnostics.
inline SessionsResult reconstruct_sessions(const metrics::LogDocument& doc) {
  SessionsResult result;
  struct Open {
    GameKind kind;
    std::int64_t start = 0;
  };
  std::optional<Open> open;
  std::string current_player;
  std::int64_t last_ts = 0;

  auto close = [&](std::int64_t at, bool completed) {
    result.segments.push_back({current_player, open->kind, open->start, at, completed});
    open.reset();
  };
  auto finish_player = [&]() {
    if (open) {
      result.diagnostics.push_back("player " + current_player +
                                   ": unterminated game segment closed at last event");
      close(last_ts, false);
    }
  };

  for (const metrics::MetricEvent& e : doc.events) {
    if (e.player_id != current_player) {
      finish_player();
      current_player = e.player_id;
    }
    last_ts = e.timestamp_ms;
    using metrics::EventId;
    switch (e.event_id) {
      case EventId::STORY_START:
      case EventId::LABYRINTHE_START: {
        if (open) close(e.timestamp_ms, false);
        open = Open{e.event_id == EventId::STORY_START ? GameKind::narratif : GameKind::ludique,
                    e.timestamp_ms};
        break;
      }
      case EventId::STORY_END_SEQUENCE: {
        if (open && open->kind == GameKind::narratif)
          close(e.timestamp_ms, true);
        else
          result.diagnostics.push_back("player " + e.player_id + ": orphan STORY_END_SEQUENCE at " +
                                       std::to_string(e.timestamp_ms));
        break;
      }
      case EventId::LABYRINTHE_END: {
        if (open && open->kind == GameKind::ludique)
          close(e.timestamp_ms, true);
        else
          result.diagnostics.push_back("player " + e.player_id + ": orphan LABYRINTHE_END at " +
                                       std::to_string(e.timestamp_ms));
        break;
      }
      case EventId::GAME_END: {
        if (open) close(e.timestamp_ms, false);
        break;
      }
      default: break;
    }
  }
  finish_player();
  return result;
}

namespace detail {

struct AnswerTally {
  long total = 0;
  long errors = 0;
  std::set<std::string> correct_cards;
  std::vector<std::int64_t> durations_ms;  // QUESTION_START -> QUESTION_ANSWER
};

// Tallies one player's contiguous event range. Durations pair each answer
// with the most recent preceding QUESTION_START.
inline AnswerTally tally_answers(const std::vector<metrics::MetricEvent>& events,
                                 std::size_t begin, std::size_t end) {
  AnswerTally tally;
  std::int64_t question_start = -1;  // no pending QUESTION_START
  for (std::size_t i = begin; i < end; ++i) {
    const metrics::MetricEvent& e = events[i];
    if (e.event_id == metrics::EventId::QUESTION_START) {
      question_start = e.timestamp_ms;
    } else if (e.event_id == metrics::EventId::QUESTION_ANSWER) {
      ++tally.total;
      const bool correct = std::get<bool>(*e.payload.find("correct"));
      if (correct)
        tally.correct_cards.insert(std::get<std::string>(*e.payload.find("card")));
      else
        ++tally.errors;
      if (question_start >= 0) {
        tally.durations_ms.push_back(e.timestamp_ms - question_start);
        question_start = -1;
      }
    }
  }
  return tally;
}

// Middle order statistic; mean of the two middle values for even counts.
inline std::optional<double> median_seconds(std::vector<std::int64_t> durations_ms) {
  if (durations_ms.empty()) return std::nullopt;
  std::sort(durations_ms.begin(), durations_ms.end());
  const std::size_t n = durations_ms.size();
  if (n % 2 == 1) return static_cast<double>(durations_ms[n / 2]) / 1000.0;
  return static_cast<double>(durations_ms[n / 2 - 1] + durations_ms[n / 2]) / 2000.0;
}

struct PlayerRange {
  std::string player_id;
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<PlayerRange> player_ranges(const metrics::LogDocument& doc) {
  std::vector<PlayerRange> ranges;
  std::size_t i = 0;
  while (i < doc.events.size()) {
    std::size_t j = i;
    while (j < doc.events.size() && doc.events[j].player_id == doc.events[i].player_id) ++j;
    ranges.push_back({doc.events[i].player_id, i, j});
    i = j;
  }
  return ranges;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

struct StudentReport {
  std::string player_id;
  long unique_cards_correct = 0;
  long total_answers = 0;
  long errors = 0;
  double error_rate = 0.0;
  std::optional<double> median_response_time_s;
  std::vector<SessionSegment> sessions;
  long narrative_launches = 0;
  long ludic_launches = 0;
};

inline std::vector<StudentReport> all_student_reports(const metrics::LogDocument& doc) {
  const SessionsResult sessions = reconstruct_sessions(doc);
  std::vector<StudentReport> reports;
  for (const auto& range : detail::player_ranges(doc)) {
    StudentReport r;
    r.player_id = range.player_id;
    auto tally = detail::tally_answers(doc.events, range.begin, range.end);
    r.total_answers = tally.total;
    r.errors = tally.errors;
    r.unique_cards_correct = static_cast<long>(tally.correct_cards.size());
    r.error_rate = tally.total > 0 ? static_cast<double>(tally.errors) /
                                         static_cast<double>(tally.total)
                                   : 0.0;
    r.median_response_time_s = detail::median_seconds(std::move(tally.durations_ms));
    for (std::size_t i = range.begin; i < range.end; ++i) {
      if (doc.events[i].event_id == metrics::EventId::STORY_START) ++r.narrative_launches;
      if (doc.events[i].event_id == metrics::EventId::LABYRINTHE_START) ++r.ludic_launches;
    }
    for (const SessionSegment& s : sessions.segments)
      if (s.player_id == range.player_id) r.sessions.push_back(s);
    reports.push_back(std::move(r));
  }
  return reports;
}

inline StudentReport student_report(const metrics::LogDocument& doc,
                                    const std::string& player_id) {
  for (auto& r : all_student_reports(doc))
    if (r.player_id == player_id) return r;
  throw ValidationError("unknown player '" + player_id + "'");
}

// --- worksheet (paper-format) answer records -------------------------------

inline constexpr const char* kPaperRecordsCsvHeader = "player_id,card_id,correct";

inline std::vector<cards::PaperAnswerRecord> load_paper_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty paper records file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPaperRecordsCsvHeader)
    throw ValidationError("bad paper records header: '" + line + "'");
  std::vector<cards::PaperAnswerRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        (fields[2] != "true" && fields[2] != "false"))
      throw ValidationError("bad paper record at line " + std::to_string(line_no));
    records.push_back({fields[0], fields[1], fields[2] == "true"});
  }
  return records;
}

inline void write_paper_records_csv(const std::vector<cards::PaperAnswerRecord>& records,
                                    std::ostream& out) {
  out << kPaperRecordsCsvHeader << '\n';
  for (const auto& r : records)
    out << r.player_id << ',' << r.card_id << ',' << (r.correct ? "true" : "false") << '\n';
}

struct ContextTotals {
  long unique_cards_correct = 0;  // summed over players
  long total_answers = 0;
  long errors = 0;
  double error_rate = 0.0;
};

struct CohortTotals {
  ContextTotals digital;
  ContextTotals paper;
  // digital unique over paper unique, minus one; absent when paper is empty.
  std::optional<double> relative_unique_difference;
};

inline CohortTotals cohort_totals(const metrics::LogDocument& doc,
                                  const std::vector<cards::PaperAnswerRecord>& paper_records) {
  CohortTotals totals;
  for (const auto& range : detail::player_ranges(doc)) {
    auto tally = detail::tally_answers(doc.events, range.begin, range.end);
    totals.digital.unique_cards_correct += static_cast<long>(tally.correct_cards.size());
    totals.digital.total_answers += tally.total;
    totals.digital.errors += tally.errors;
  }
  std::map<std::string, std::set<std::string>> paper_correct;
  for (const auto& r : paper_records) {
    ++totals.paper.total_answers;
    if (r.correct)
      paper_correct[r.player_id].insert(r.card_id);
    else
      ++totals.paper.errors;
  }
  for (const auto& [player, cards_set] : paper_correct)
    totals.paper.unique_cards_correct += static_cast<long>(cards_set.size());

  if (totals.digital.total_answers == 0 && totals.paper.total_answers == 0)
    throw ValidationError("empty context: no answers in either context");
  if (totals.digital.total_answers > 0)
    totals.digital.error_rate = static_cast<double>(totals.digital.errors) /
                                static_cast<double>(totals.digital.total_answers);
  if (totals.paper.total_answers > 0)
    totals.paper.error_rate = static_cast<double>(totals.paper.errors) /
                              static_cast<double>(totals.paper.total_answers);
  if (totals.paper.unique_cards_correct > 0)
    totals.relative_unique_difference =
        static_cast<double>(totals.digital.unique_cards_correct) /
            static_cast<double>(totals.paper.unique_cards_correct) -
        1.0;
  return totals;
}

// --- per-card error rates ---------------------------------------------------

struct CardReport {
  std::string card_id;
  long attempts = 0;
  long errors = 0;
  double error_rate = 0.0;
  std::map<int, long> wrong_choice_histogram;  // choice -> wrong answers picking it
};

// One report per attempted card, ordered by card_id (deck ids are
// zero-padded, so lexicographic order is file-then-difficulty order).
inline std::vector<CardReport> card_error_rates(const metrics::LogDocument& doc) {
  std::map<std::string, CardReport> by_card;
  for (const metrics::MetricEvent& e : doc.events) {
    if (e.event_id != metrics::EventId::QUESTION_ANSWER) continue;
    const std::string& card = std::get<std::string>(*e.payload.find("card"));
    CardReport& r = by_card[card];
    r.card_id = card;
    ++r.attempts;
    if (!std::get<bool>(*e.payload.find("correct"))) {
      ++r.errors;
      ++r.wrong_choice_histogram[static_cast<int>(
          std::get<std::int64_t>(*e.payload.find("choice")))];
    }
  }
  std::vector<CardReport> reports;
  reports.reserve(by_card.size());
  for (auto& [card, r] : by_card) {
    r.error_rate = static_cast<double>(r.errors) / static_cast<double>(r.attempts);
    reports.push_back(std::move(r));
  }
  return reports;
}

// --- success rate versus median response time -------------------------------

struct GroupMap {
  std::map<std::string, std::string> group_of;
};

inline constexpr const char* kGroupMapCsvHeader = "player_id,group";

inline GroupMap load_group_map_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty group map file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kGroupMapCsvHeader)
    throw ValidationError("bad group map header: '" + line + "'");
  GroupMap map;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw ValidationError("bad group map entry at line " + std::to_string(line_no));
    map.group_of[fields[0]] = fields[1];
  }
  return map;
}

inline void write_group_map_csv(const GroupMap& map, std::ostream& out) {
  out << kGroupMapCsvHeader << '\n';
  for (const auto& [player, group] : map.group_of) out << player << ',' << group << '\n';
}

struct SuccessTimePoint {
  std::string player_id;
  std::string group;
  double success_rate = 0.0;
  double median_time_s = 0.0;
  long n_cards = 0;  // answers given; drives the plotted point width
};

struct SuccessTimeResult {
  std::vector<SuccessTimePoint> points;
  std::vector<std::string> diagnostics;
};

inline SuccessTimeResult success_vs_time(const metrics::LogDocument& doc,
                                         const GroupMap& groups) {
  SuccessTimeResult result;
  for (const auto& range : detail::player_ranges(doc)) {
    auto tally = detail::tally_answers(doc.events, range.begin, range.end);
    if (tally.total == 0) {
      result.diagnostics.push_back("player " + range.player_id +
                                   " excluded: no answered questions");
      continue;
    }
    const auto median = detail::median_seconds(std::move(tally.durations_ms));
    if (!median) {
      result.diagnostics.push_back("player " + range.player_id +
                                   " excluded: no measurable response times");
      continue;
    }
    SuccessTimePoint p;
    p.player_id = range.player_id;
    const auto it = groups.group_of.find(range.player_id);
    if (it != groups.group_of.end()) {
      p.group = it->second;
    } else {
      result.diagnostics.push_back("player " + range.player_id + " has no group label");
    }
    p.success_rate = static_cast<double>(tally.total - tally.errors) /
                     static_cast<double>(tally.total);
    p.median_time_s = *median;
    p.n_cards = tally.total;
    result.points.push_back(std::move(p));
  }
  return result;
}

// --- bonus capture ----------------------------------------------------------

struct BonusStats {
  long captured = 0;
  long available = 0;                // spawn events
  std::optional<double> rate;        // absent when nothing was available
};

// A capture is a LABYRINTHE_BONUS collision followed by
// questions_per_pickup all-correct answers before any non-question event.
inline BonusStats bonus_capture_rate(const metrics::LogDocument& doc,
                                     int questions_per_pickup = 2) {
  if (questions_per_pickup < 1) throw ValidationError("questions_per_pickup must be >= 1");
  BonusStats stats;
  for (const auto& range : detail::player_ranges(doc)) {
    std::size_t i = range.begin;
    while (i < range.end) {
      const metrics::MetricEvent& e = doc.events[i];
      if (e.event_id == metrics::EventId::LABYRINTHE_BONUS_SPAWN) {
        ++stats.available;
        ++i;
        continue;
      }
      if (e.event_id != metrics::EventId::LABYRINTHE_BONUS) {
        ++i;
        continue;
      }
      // Collect the immediate question run after the collision.
      int answers = 0;
      bool all_correct = true;
      std::size_t j = i + 1;
      for (; j < range.end && answers < questions_per_pickup; ++j) {
        switch (doc.events[j].event_id) {
          case metrics::EventId::QUESTION_START:
          case metrics::EventId::QUESTION_EXAMPLE:
          case metrics::EventId::QUESTION_QCM:
          case metrics::EventId::GAME_PAUSE: continue;
          case metrics::EventId::QUESTION_ANSWER:
            ++answers;
            if (!std::get<bool>(*doc.events[j].payload.find("correct"))) all_correct = false;
            continue;
          default: break;
        }
        break;  // non-question event ends the attempt
      }
      if (answers == questions_per_pickup && all_correct) ++stats.captured;
      i = j;
    }
  }
  if (stats.available > 0)
    stats.rate = static_cast<double>(stats.captured) / static_cast<double>(stats.available);
  return stats;
}

// --- helper for deriving a motivation table from logs ------------------------

// Activity tallies per group per 7-day week (two groups, two weeks),
// rows ordered by group label, columns by week. Input segments must span
// at most two weeks from the earliest start.
inline stats::Table2x2 chi2_counts_from_sessions(const std::vector<SessionSegment>& segments,
                                                 const GroupMap& groups) {
  if (segments.empty()) throw ValidationError("no game segments to tally");
  std::set<std::string> labels;
  for (const auto& [player, group] : groups.group_of) labels.insert(group);
  if (labels.size() != 2)
    throw ValidationError("expected exactly 2 groups, got " + std::to_string(labels.size()));
  std::int64_t min_start = segments.front().start_ms;
  for (const auto& s : segments) min_start = std::min(min_start, s.start_ms);
  constexpr std::int64_t kWeekMs = 7LL * 24 * 60 * 60 * 1000;
  stats::Table2x2 table{{{0.0, 0.0}, {0.0, 0.0}}};
  for (const auto& s : segments) {
    const auto it = groups.group_of.find(s.player_id);
    if (it == groups.group_of.end())
      throw ValidationError("player " + s.player_id + " missing from group map");
    const std::size_t row = it->second == *labels.begin() ? 0 : 1;
    const std::int64_t week = (s.start_ms - min_start) / kWeekMs;
    if (week < 0 || week > 1)
      throw ValidationError("segments span more than two weeks; pass explicit counts");
    table[row][static_cast<std::size_t>(week)] += 1.0;
  }
  return table;
}

}  // namespace qcm::analytics
