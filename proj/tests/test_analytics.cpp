#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "qcm/analytics.hpp"
#include "qcm/metrics.hpp"
#include "qcm/reports.hpp"
#include "qcm/rng.hpp"
#include "qcm/sim.hpp"

using namespace qcm;
using analytics::GameKind;
using metrics::EventId;
using metrics::LogDocument;
using testutil::ev;
using testutil::ev_answer;
using testutil::ev_true;

namespace {

LogDocument doc_of(std::vector<metrics::MetricEvent> events) {
  LogDocument doc;
  doc.events = std::move(events);
  metrics::sort_events(doc.events);
  return doc;
}

}  // namespace

TEST_CASE("a story bracketed by its end sequence is one completed segment") {
  const auto doc = doc_of({
      ev_true(1000, 1, "A", EventId::STORY_START),
      ev_true(5000, 2, "A", EventId::STORY_END_SEQUENCE),
  });
  const auto result = analytics::reconstruct_sessions(doc);
  REQUIRE(result.segments.size() == 1);
  CHECK(result.segments[0].game_kind == GameKind::narratif);
  CHECK(result.segments[0].start_ms == 1000);
  CHECK(result.segments[0].end_ms == 5000);
  CHECK(result.segments[0].completed);
  CHECK(result.diagnostics.empty());
}

TEST_CASE("two interleaved players give two independent segment lists") {
  const auto doc = doc_of({
      ev_true(1000, 1, "A", EventId::LABYRINTHE_START),
      ev_true(1100, 1, "B", EventId::STORY_START),
      ev_true(9000, 2, "A", EventId::LABYRINTHE_END),
      ev_true(9100, 2, "B", EventId::STORY_END_SEQUENCE),
  });
  const auto result = analytics::reconstruct_sessions(doc);
  REQUIRE(result.segments.size() == 2);
  CHECK(result.segments[0].player_id == "A");
  CHECK(result.segments[0].game_kind == GameKind::ludique);
  CHECK(result.segments[1].player_id == "B");
  CHECK(result.segments[1].game_kind == GameKind::narratif);
}

TEST_CASE("a start without its end closes at GAME_END, incomplete") {
  const auto doc = doc_of({
      ev_true(1000, 1, "A", EventId::GAME_START),
      ev_true(2000, 2, "A", EventId::LABYRINTHE_START),
      ev_true(7000, 3, "A", EventId::GAME_END),
  });
  const auto result = analytics::reconstruct_sessions(doc);
  REQUIRE(result.segments.size() == 1);
  CHECK(result.segments[0].start_ms == 2000);
  CHECK(result.segments[0].end_ms == 7000);
  CHECK_FALSE(result.segments[0].completed);
}

TEST_CASE("a new start closes the previous segment, incomplete") {
  const auto doc = doc_of({
      ev_true(1000, 1, "A", EventId::STORY_START),
      ev_true(4000, 2, "A", EventId::LABYRINTHE_START),
      ev_true(8000, 3, "A", EventId::LABYRINTHE_END),
  });
  const auto result = analytics::reconstruct_sessions(doc);
  REQUIRE(result.segments.size() == 2);
  CHECK(result.segments[0].game_kind == GameKind::narratif);
  CHECK(result.segments[0].end_ms == 4000);
  CHECK_FALSE(result.segments[0].completed);
  CHECK(result.segments[1].completed);
}

TEST_CASE("orphan end events become diagnostics") {
  const auto doc = doc_of({
      ev_true(1000, 1, "A", EventId::STORY_END_SEQUENCE),
  });
  const auto result = analytics::reconstruct_sessions(doc);
  CHECK(result.segments.empty());
  REQUIRE(result.segments.size() == 0);
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].find("orphan") != std::string::npos);
}

TEST_CASE("student report counts answers, errors and unique correct cards") {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  std::int64_t t = 0;
  // 133 answers over 48 cards, exactly 2 wrong
  for (int i = 0; i < 133; ++i) {
    const std::string card = "L2-" + std::to_string(i % 48);
    events.push_back(ev_true(t, seq++, "H", EventId::QUESTION_START));
    t += 10000;
    events.push_back(ev_answer(t, seq++, "H", card, 1, i >= 2));
    t += 500;
  }
  const auto doc = doc_of(std::move(events));
  const auto report = analytics::student_report(doc, "H");
  CHECK(report.total_answers == 133);
  CHECK(report.errors == 2);
  CHECK(report.error_rate == doctest::Approx(2.0 / 133.0));
  CHECK(report.unique_cards_correct <= 48);
  CHECK(report.unique_cards_correct == 48);
  CHECK_THROWS_AS(analytics::student_report(doc, "nobody"), ValidationError);
}

TEST_CASE("replaying far past the file size cannot inflate unique cards") {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  for (int i = 0; i < 145; ++i)
    events.push_back(ev_answer(i * 1000, seq++, "R", "L2-" + std::to_string(i % 48), 1, true));
  const auto report = analytics::student_report(doc_of(std::move(events)), "R");
  CHECK(report.total_answers == 145);
  CHECK(report.unique_cards_correct == 48);
}

TEST_CASE("median response time is the middle order statistic") {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  std::int64_t t = 0;
  for (const int seconds : {10, 30, 20}) {  // unsorted on purpose
    events.push_back(ev_true(t, seq++, "A", EventId::QUESTION_START));
    events.push_back(ev_answer(t + seconds * 1000, seq++, "A", "c", 1, true));
    t += 100000;
  }
  const auto report = analytics::student_report(doc_of(std::move(events)), "A");
  REQUIRE(report.median_response_time_s.has_value());
  CHECK(*report.median_response_time_s == 20.0);
}

TEST_CASE("context totals and the relative unique-card difference") {
  // digital: 14 players x 46 unique + 1 x 48 = 692 unique correct cards
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  for (int p = 0; p < 15; ++p) {
    const int unique = p < 14 ? 46 : 48;
    for (int c = 0; c < unique; ++c)
      events.push_back(ev_answer(c * 1000, seq++, "p" + std::to_string(p),
                                 "L2-" + std::to_string(c), 1, true));
  }
  // paper: 418 unique correct = 8 x 48 + 1 x 34, plus 10 wrong answers
  std::vector<cards::PaperAnswerRecord> paper;
  for (int p = 0; p < 9; ++p) {
    const int unique = p < 8 ? 48 : 34;
    for (int c = 0; c < unique; ++c)
      paper.push_back({"q" + std::to_string(p), "L2-" + std::to_string(c), true});
  }
  for (int i = 0; i < 10; ++i) paper.push_back({"q0", "L2-0", false});

  const auto totals = analytics::cohort_totals(doc_of(std::move(events)), paper);
  CHECK(totals.digital.unique_cards_correct == 692);
  CHECK(totals.paper.unique_cards_correct == 418);
  CHECK(totals.digital.error_rate == 0.0);
  CHECK(totals.paper.errors == 10);
  REQUIRE(totals.relative_unique_difference.has_value());
  CHECK(*totals.relative_unique_difference == doctest::Approx(692.0 / 418.0 - 1.0));
  CHECK(*totals.relative_unique_difference == doctest::Approx(0.6555).epsilon(0.001));
}

TEST_CASE("totals over nothing at all are an error") {
  CHECK_THROWS_AS(analytics::cohort_totals(doc_of({}), {}), ValidationError);
}

TEST_CASE("card reports concentrate repeated wrong choices in the histogram") {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  for (int i = 0; i < 7; ++i)
    events.push_back(ev_answer(i * 1000, seq++, "p" + std::to_string(i), "card-49", 2, false));
  events.push_back(ev_answer(8000, seq++, "z", "card-49", 3, true));
  events.push_back(ev_answer(9000, seq++, "z", "easy-1", 1, true));

  const auto reports = analytics::card_error_rates(doc_of(std::move(events)));
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].card_id == "card-49");
  CHECK(reports[0].attempts == 8);
  CHECK(reports[0].errors == 7);
  CHECK(reports[0].wrong_choice_histogram.at(2) == 7);
  CHECK(reports[1].card_id == "easy-1");
  CHECK(reports[1].errors == 0);
  CHECK(reports[1].error_rate == 0.0);
}

TEST_CASE("success-vs-time points carry groups and sizes; silent players are excluded") {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  for (int i = 0; i < 4; ++i) {
    events.push_back(ev_true(i * 100000, seq++, "A", EventId::QUESTION_START));
    events.push_back(ev_answer(i * 100000 + 12000, seq++, "A", "c" + std::to_string(i), 1, true));
  }
  events.push_back(ev_true(1, 1, "B", EventId::QUESTION_START));
  events.push_back(ev_answer(15001, 2, "B", "c", 1, false));
  events.push_back(ev_true(500, 1, "mute", EventId::GAME_START));  // no answers

  analytics::GroupMap groups;
  groups.group_of = {{"A", "g1"}, {"B", "g2"}, {"mute", "g1"}};
  const auto result = analytics::success_vs_time(doc_of(std::move(events)), groups);
  REQUIRE(result.points.size() == 2);
  CHECK(result.points[0].player_id == "A");
  CHECK(result.points[0].success_rate == 1.0);
  CHECK(result.points[0].median_time_s == 12.0);
  CHECK(result.points[0].n_cards == 4);
  CHECK(result.points[0].group == "g1");
  CHECK(result.points[1].group == "g2");
  CHECK(result.points[1].success_rate == 0.0);
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].find("mute") != std::string::npos);
}

TEST_CASE("bonus capture counts spawns against completed two-answer runs") {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t seq = 1;
  std::int64_t t = 0;
  auto spawn = [&] { events.push_back(ev_true(t += 10, seq++, "A", EventId::LABYRINTHE_BONUS_SPAWN)); };
  auto attempt = [&](bool first, bool second) {
    events.push_back(ev_true(t += 10, seq++, "A", EventId::LABYRINTHE_BONUS));
    events.push_back(ev_true(t += 10, seq++, "A", EventId::QUESTION_START));
    events.push_back(ev_answer(t += 10, seq++, "A", "x", 1, first));
    events.push_back(ev_true(t += 10, seq++, "A", EventId::QUESTION_START));
    events.push_back(ev_answer(t += 10, seq++, "A", "y", 1, second));
  };
  spawn();
  attempt(true, true);  // captured
  spawn();
  attempt(true, false);  // missed
  spawn();               // never even attempted
  // attempt cut short by a level event: not captured
  spawn();
  events.push_back(ev_true(t += 10, seq++, "A", EventId::LABYRINTHE_BONUS));
  events.push_back(ev_true(t += 10, seq++, "A", EventId::QUESTION_START));
  events.push_back(ev_answer(t += 10, seq++, "A", "x", 1, true));
  events.push_back(ev(t += 10, seq++, "A", EventId::LABYRINTHE_LEVEL, {{"level", std::int64_t{2}}}));

  const auto stats = analytics::bonus_capture_rate(doc_of(std::move(events)), 2);
  CHECK(stats.available == 4);
  CHECK(stats.captured == 1);
  REQUIRE(stats.rate.has_value());
  CHECK(*stats.rate == 0.25);
}

TEST_CASE("no spawns means the rate is undefined, not zero") {
  const auto stats = analytics::bonus_capture_rate(doc_of({ev_true(1, 1, "A", EventId::GAME_START)}));
  CHECK(stats.available == 0);
  CHECK_FALSE(stats.rate.has_value());
}

TEST_CASE("a simulated always-collecting perfect player captures every spawned bonus") {
  sim::SimConfig config;
  config.master_seed = 12;
  auto p = sim::PlayerProfile{};
  p.player_id = "P";
  p.group = "A";
  p.p_correct_base = 1.0;
  p.response_time = {5.0, 0.3};
  p.preference_narratif = 0.0;
  p.preference_ludique = 1.0;
  p.replay_propensity = 0.0;  // a single full playthrough, never cut by the clock
  p.bonus_affinity = 1.0;
  config.profiles.push_back(p);
  config.schedule.push_back({1, 45.0, sim::Activity::ludique, sim::Activity::none});
  const auto out = sim::simulate_cohort(config);
  const auto stats = analytics::bonus_capture_rate(out.merged, config.questions_per_pickup);
  CHECK(stats.available > 0);
  REQUIRE(stats.rate.has_value());
  CHECK(*stats.rate == 1.0);
}

TEST_CASE("analytics are invariant to how players' lines interleave in the file") {
  sim::SimConfig config;
  config.master_seed = 77;
  for (const char* id : {"A", "B", "C"}) {
    auto p = sim::PlayerProfile{};
    p.player_id = id;
    p.group = "A";
    p.p_correct_base = 0.85;
    p.response_time = {8.0, 0.4};
    p.preference_narratif = 0.5;
    p.preference_ludique = 0.5;
    config.profiles.push_back(p);
  }
  config.schedule.push_back({1, 10.0, sim::Activity::games, sim::Activity::games});
  const auto out = sim::simulate_cohort(config);

  std::vector<std::string> lines;
  for (const auto& e : out.merged.events) lines.push_back(metrics::serialize_event(e));
  rng::Engine eng(5);
  for (std::size_t i = lines.size(); i > 1; --i)
    std::swap(lines[i - 1], lines[eng.below(i)]);

  std::string shuffled;
  for (const auto& line : lines) shuffled += line;
  std::istringstream in(shuffled);
  const auto reread = metrics::read_log(in);
  REQUIRE(reread.diagnostics.empty());

  std::ostringstream direct, reordered;
  reports::write_students_csv(analytics::all_student_reports(out.merged), direct);
  reports::write_students_csv(analytics::all_student_reports(reread.doc), reordered);
  CHECK(direct.str() == reordered.str());
}

TEST_CASE("activity tallies per group and week form the motivation table") {
  std::vector<analytics::SessionSegment> segments;
  constexpr std::int64_t kDay = 86400000;
  auto add = [&](const std::string& player, int day, int count) {
    for (int i = 0; i < count; ++i)
      segments.push_back({player, GameKind::ludique, day * kDay + i, day * kDay + i + 1, true});
  };
  add("a1", 0, 4);   // group A, week 1
  add("a1", 8, 2);   // group A, week 2
  add("b1", 1, 3);   // group B, week 1
  add("b1", 9, 5);   // group B, week 2
  analytics::GroupMap groups;
  groups.group_of = {{"a1", "A"}, {"b1", "B"}};
  const auto table = analytics::chi2_counts_from_sessions(segments, groups);
  CHECK(table[0][0] == 4);
  CHECK(table[0][1] == 2);
  CHECK(table[1][0] == 3);
  CHECK(table[1][1] == 5);
}

TEST_CASE("oracle check: streaming analytics equal a naive recount on random logs") {
  rng::Engine eng(20250807);
  for (int round = 0; round < 25; ++round) {
    // build a random but contract-valid log for a handful of players
    std::vector<metrics::MetricEvent> events;
    const int players = 1 + static_cast<int>(eng.below(4));
    for (int p = 0; p < players; ++p) {
      const std::string player = "pl" + std::to_string(p);
      std::uint64_t seq = 1;
      std::int64_t t = eng.range(0, 1000);
      const int n = static_cast<int>(eng.range(5, 50));
      for (int i = 0; i < n; ++i) {
        auto e = testutil::random_event(eng);
        e.player_id = player;
        e.seq = seq++;
        t += eng.range(0, 20000);
        e.timestamp_ms = t;
        events.push_back(std::move(e));
      }
    }
    const auto doc = doc_of(std::move(events));

    const auto students = analytics::all_student_reports(doc);
    for (const auto& s : students) {
      const auto naive = testutil::naive_student(doc.events, s.player_id);
      CHECK(s.total_answers == naive.answers);
      CHECK(s.errors == naive.errors);
      CHECK(s.unique_cards_correct == naive.unique_correct);
      CHECK(s.median_response_time_s == naive.median_s);
      CHECK(s.narrative_launches == naive.story_starts);
      CHECK(s.ludic_launches == naive.lab_starts);
    }

    const auto cards_out = analytics::card_error_rates(doc);
    const auto naive_cards = testutil::naive_cards(doc.events);
    REQUIRE(cards_out.size() == naive_cards.size());
    long total_attempts = 0, total_answers = 0;
    for (const auto& c : cards_out) {
      const auto& naive = naive_cards.at(c.card_id);
      CHECK(c.attempts == naive.attempts);
      CHECK(c.errors == naive.errors);
      CHECK(c.wrong_choice_histogram == naive.wrong_hist);
      long hist_sum = 0;
      for (const auto& [choice, count] : c.wrong_choice_histogram) hist_sum += count;
      CHECK(hist_sum == c.errors);
      total_attempts += c.attempts;
    }
    for (const auto& e : doc.events)
      if (e.event_id == EventId::QUESTION_ANSWER) ++total_answers;
    CHECK(total_attempts == total_answers);

    const auto bonus = analytics::bonus_capture_rate(doc, 2);
    const auto naive_b = testutil::naive_bonus(doc.events, 2);
    CHECK(bonus.available == naive_b.available);
    CHECK(bonus.captured == naive_b.captured);

    const auto sessions = analytics::reconstruct_sessions(doc);
    const auto naive_s = testutil::naive_segments(doc.events);
    CHECK(sessions.segments.size() == naive_s.size());
  }
}
