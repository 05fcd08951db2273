#pragma once

// Shared test utilities: a generator of contract-valid metric events for
// property tests, shorthand builders for hand-written logs, and naive
// brute-force recounts used as independent oracles for the analytics
// implementations. The recounts here are deliberately written from the
// definitions, not by calling the streaming code they check.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qcm/metrics.hpp"
#include "qcm/rng.hpp"

namespace testutil {

using qcm::metrics::EventId;
using qcm::metrics::MetricEvent;
using qcm::metrics::Payload;

inline MetricEvent ev(std::int64_t ts, std::uint64_t seq, std::string player, EventId id,
                      Payload payload) {
  return {ts, seq, std::move(player), id, std::move(payload)};
}

inline MetricEvent ev_true(std::int64_t ts, std::uint64_t seq, std::string player, EventId id) {
  return ev(ts, seq, std::move(player), id, {{"value", true}});
}

inline MetricEvent ev_answer(std::int64_t ts, std::uint64_t seq, std::string player,
                             std::string card, int choice, bool correct) {
  return ev(ts, seq, std::move(player), EventId::QUESTION_ANSWER,
            {{"card", std::move(card)},
             {"choice", static_cast<std::int64_t>(choice)},
             {"correct", correct}});
}

// Random string including the characters the escaper must handle.
inline std::string random_string(qcm::rng::Engine& eng) {
  static constexpr char alphabet[] =
      "abcXYZ019_-./%;=\t\r caf\xc3\xa9";  // includes bytes that need escaping
  const int len = static_cast<int>(eng.range(1, 12));
  std::string s;
  for (int i = 0; i < len; ++i) {
    char c = alphabet[eng.below(sizeof alphabet - 1)];
    if (c == '\0') c = 'x';
    s.push_back(c);
  }
  return s;
}

// Contract-valid event with random id, payload and occasional extra keys.
inline MetricEvent random_event(qcm::rng::Engine& eng, std::uint64_t seq_hint = 0) {
  MetricEvent e;
  e.timestamp_ms = eng.range(0, 2'000'000'000);
  e.seq = seq_hint != 0 ? seq_hint : static_cast<std::uint64_t>(eng.range(1, 1'000'000));
  e.player_id = random_string(eng);
  e.event_id = static_cast<EventId>(eng.below(qcm::metrics::kEventNames.size()));
  switch (e.event_id) {
    case EventId::STORY_SCENE_START:
    case EventId::STORY_SCENE_END:
      e.payload.add("scene", eng.range(1, 7));
      break;
    case EventId::LABYRINTHE_LEVEL:
      e.payload.add("level", eng.range(1, 5));
      break;
    case EventId::QUESTION_EXAMPLE:
      e.payload.add("image", random_string(eng));
      break;
    case EventId::QUESTION_ANSWER:
      e.payload.add("card", random_string(eng));
      e.payload.add("choice", eng.range(1, 6));
      e.payload.add("correct", eng.bernoulli(0.7));
      break;
    case EventId::MOVE:
      e.payload.add("x", eng.range(0, 16));
      e.payload.add("y", eng.range(0, 16));
      break;
    case EventId::GAME_PAUSE:
      e.payload.add("value", eng.bernoulli(0.5));
      break;
    default:
      e.payload.add("value", true);
      break;
  }
  if (eng.bernoulli(0.2)) e.payload.add("extra", eng.range(-1000, 1000));
  if (eng.bernoulli(0.1)) e.payload.add("flag", eng.bernoulli(0.5));
  return e;
}

// --- independent brute-force oracles ----------------------------------------
// Naive recounts straight from the definitions, used to cross-check the
// streaming analytics. They rescan the raw event list for every question.

struct NaiveStudent {
  long answers = 0;
  long errors = 0;
  long unique_correct = 0;
  std::optional<double> median_s;
  long story_starts = 0;
  long lab_starts = 0;
};

inline std::vector<MetricEvent> player_events_in_seq_order(
    const std::vector<MetricEvent>& events, const std::string& player) {
  std::vector<MetricEvent> mine;
  for (const auto& e : events)
    if (e.player_id == player) mine.push_back(e);
  std::sort(mine.begin(), mine.end(),
            [](const MetricEvent& a, const MetricEvent& b) { return a.seq < b.seq; });
  return mine;
}

inline NaiveStudent naive_student(const std::vector<MetricEvent>& events,
                                  const std::string& player) {
  NaiveStudent out;
  const auto mine = player_events_in_seq_order(events, player);
  std::set<std::string> correct_cards;
  std::vector<std::int64_t> durations;
  std::int64_t last_start = -1;
  for (const auto& e : mine) {
    if (e.event_id == EventId::STORY_START) ++out.story_starts;
    if (e.event_id == EventId::LABYRINTHE_START) ++out.lab_starts;
    if (e.event_id == EventId::QUESTION_START) last_start = e.timestamp_ms;
    if (e.event_id != EventId::QUESTION_ANSWER) continue;
    ++out.answers;
    if (std::get<bool>(*e.payload.find("correct")))
      correct_cards.insert(std::get<std::string>(*e.payload.find("card")));
    else
      ++out.errors;
    if (last_start >= 0) {
      durations.push_back(e.timestamp_ms - last_start);
      last_start = -1;
    }
  }
  out.unique_correct = static_cast<long>(correct_cards.size());
  if (!durations.empty()) {
    std::sort(durations.begin(), durations.end());
    const std::size_t n = durations.size();
    out.median_s = n % 2 == 1 ? static_cast<double>(durations[n / 2]) / 1000.0
                              : static_cast<double>(durations[n / 2 - 1] + durations[n / 2]) /
                                    2000.0;
  }
  return out;
}

struct NaiveCard {
  long attempts = 0;
  long errors = 0;
  std::map<int, long> wrong_hist;
};

inline std::map<std::string, NaiveCard> naive_cards(const std::vector<MetricEvent>& events) {
  std::map<std::string, NaiveCard> cards;
  for (const auto& e : events) {
    if (e.event_id != EventId::QUESTION_ANSWER) continue;
    auto& c = cards[std::get<std::string>(*e.payload.find("card"))];
    ++c.attempts;
    if (!std::get<bool>(*e.payload.find("correct"))) {
      ++c.errors;
      ++c.wrong_hist[static_cast<int>(std::get<std::int64_t>(*e.payload.find("choice")))];
    }
  }
  return cards;
}

struct NaiveBonus {
  long captured = 0;
  long available = 0;
};

inline NaiveBonus naive_bonus(const std::vector<MetricEvent>& events, int per_pickup) {
  NaiveBonus out;
  std::set<std::string> players;
  for (const auto& e : events) players.insert(e.player_id);
  for (const auto& player : players) {
    const auto mine = player_events_in_seq_order(events, player);
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (mine[i].event_id == EventId::LABYRINTHE_BONUS_SPAWN) ++out.available;
      if (mine[i].event_id != EventId::LABYRINTHE_BONUS) continue;
      int answers = 0;
      bool ok = true;
      std::size_t j = i + 1;
      for (; j < mine.size() && answers < per_pickup; ++j) {
        const EventId id = mine[j].event_id;
        if (id == EventId::QUESTION_START || id == EventId::QUESTION_EXAMPLE ||
            id == EventId::QUESTION_QCM || id == EventId::GAME_PAUSE)
          continue;
        if (id == EventId::QUESTION_ANSWER) {
          ++answers;
          if (!std::get<bool>(*mine[j].payload.find("correct"))) ok = false;
          continue;
        }
        break;
      }
      if (answers == per_pickup && ok) ++out.captured;
      i = j - 1;
    }
  }
  return out;
}

struct NaiveSegment {
  std::string player;
  bool narrative = false;
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool completed = false;
};

inline std::vector<NaiveSegment> naive_segments(const std::vector<MetricEvent>& events) {
  std::vector<NaiveSegment> segments;
  std::set<std::string> players;
  for (const auto& e : events) players.insert(e.player_id);
  for (const auto& player : players) {
    const auto mine = player_events_in_seq_order(events, player);
    std::optional<NaiveSegment> open;
    std::int64_t last_ts = 0;
    for (const auto& e : mine) {
      last_ts = e.timestamp_ms;
      const EventId id = e.event_id;
      if (id == EventId::STORY_START || id == EventId::LABYRINTHE_START) {
        if (open) {
          open->end = e.timestamp_ms;
          segments.push_back(*open);
        }
        open = NaiveSegment{player, id == EventId::STORY_START, e.timestamp_ms, 0, false};
      } else if (id == EventId::STORY_END_SEQUENCE && open && open->narrative) {
        open->end = e.timestamp_ms;
        open->completed = true;
        segments.push_back(*open);
        open.reset();
      } else if (id == EventId::LABYRINTHE_END && open && !open->narrative) {
        open->end = e.timestamp_ms;
        open->completed = true;
        segments.push_back(*open);
        open.reset();
      } else if (id == EventId::GAME_END && open) {
        open->end = e.timestamp_ms;
        segments.push_back(*open);
        open.reset();
      }
    }
    if (open) {
      open->end = last_ts;
      segments.push_back(*open);
    }
  }
  return segments;
}

}  // namespace testutil
