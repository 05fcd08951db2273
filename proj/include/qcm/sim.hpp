#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcm/cards.hpp"
#include "qcm/errors.hpp"
#include "qcm/games.hpp"
#include "qcm/maze.hpp"
#include "qcm/metrics.hpp"
#include "qcm/rng.hpp"

// Deterministic synthetic players. A profile fixes a player's accuracy
// (base probability, per-difficulty decrement, an in-game carelessness
// multiplier), a log-normal response-time model, game preferences, replay
// appetite and pause rate. Sessions drive the card scheduler through the
// narrative or labyrinth state machine and emit contract-valid metric
// events; worksheet sessions produce plain answer records instead of
// events. Every draw derives from the master seed through a fixed
// splitting hierarchy (master -> player -> session -> purpose), so a
// cohort run is a pure function of its config.

namespace qcm::sim {

using games::GameKind;

struct ResponseModel {
  double median_s = 15.0;
  double dispersion = 0.5;  // log-space sigma
};

struct PlayerProfile {
  std::string player_id;
  std::string group;  // "A" or "B"
  double p_correct_base = 0.9;
  double p_correct_slope = 0.0;  // accuracy decrement per difficulty rank
  ResponseModel response_time;
  double preference_narratif = 0.5;
  double preference_ludique = 0.5;
  double replay_propensity = 0.6;
  double carelessness_factor = 1.0;  // multiplies accuracy in game context
  double pause_rate_per_min = 0.0;
  double bonus_affinity = 0.8;  // chance of going for the bonus each level

  void validate() const {
    auto probability = [&](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("profile " + player_id + ": " + name + " outside [0,1]");
    };
    if (player_id.empty()) throw ValidationError("profile with empty player_id");
    if (group != "A" && group != "B")
      throw ValidationError("profile " + player_id + ": group must be A or B");
    probability(p_correct_base, "p_correct_base");
    probability(p_correct_slope, "p_correct_slope");
    probability(preference_narratif, "preference_narratif");
    probability(preference_ludique, "preference_ludique");
    probability(replay_propensity, "replay_propensity");
    probability(bonus_affinity, "bonus_affinity");
    if (std::fabs(preference_narratif + preference_ludique - 1.0) > 1e-9)
      throw ValidationError("profile " + player_id + ": preference weights must sum to 1");
    if (!(carelessness_factor > 0.0 && carelessness_factor <= 1.0))
      throw ValidationError("profile " + player_id + ": carelessness_factor outside (0,1]");
    if (!(response_time.median_s > 0.0))
      throw ValidationError("profile " + player_id + ": response median must be > 0");
    if (!(response_time.dispersion >= 0.0))
      throw ValidationError("profile " + player_id + ": response dispersion must be >= 0");
    if (!(pause_rate_per_min >= 0.0))
      throw ValidationError("profile " + player_id + ": pause_rate_per_min must be >= 0");
  }
};

enum class Activity { games, narratif, ludique, paper, none };

inline const char* activity_label(Activity a) {
  switch (a) {
    case Activity::games: return "games";
    case Activity::narratif: return "narratif";
    case Activity::ludique: return "ludique";
    case Activity::paper: return "paper";
    case Activity::none: return "none";
  }
  return "none";
}

struct SessionSpec {
  int session_index = 1;
  double minutes = 25.0;
  Activity group_a = Activity::games;
  Activity group_b = Activity::paper;
};

struct SimConfig {
  std::uint64_t master_seed = 1;
  int level_count = 5;
  int questions_per_pickup = 2;
  bool force_both_games_first_session = true;
  std::int64_t start_epoch_ms = 1464739200000;  // arbitrary fixed default
  cards::Deck deck2 = cards::make_default_deck(2);
  cards::Deck deck3 = cards::make_default_deck(3);
  std::vector<PlayerProfile> profiles;
  std::vector<SessionSpec> schedule;

  void validate() const {
    if (level_count < maze::kMinLevel || level_count > maze::kMaxLevel)
      throw ValidationError("config: level_count outside 1..5");
    if (questions_per_pickup < 1 || questions_per_pickup > 10)
      throw ValidationError("config: questions_per_pickup outside 1..10");
    if (profiles.empty()) throw ValidationError("config: no profiles");
    std::set<std::string> ids;
    for (const auto& p : profiles) {
      p.validate();
      if (!ids.insert(p.player_id).second)
        throw ValidationError("config: duplicate player_id " + p.player_id);
    }
    int last_index = 0;
    for (const auto& s : schedule) {
      if (s.session_index <= last_index)
        throw ValidationError("config: schedule session_index values must be increasing");
      last_index = s.session_index;
      if (!(s.minutes >= 0.0))
        throw ValidationError("config: schedule minutes must be >= 0");
    }
  }
};

namespace detail {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Accuracy for one card in one context.
inline double accuracy(const PlayerProfile& prof, int difficulty_rank, bool game_context) {
  double p = clamp01(prof.p_correct_base - prof.p_correct_slope * (difficulty_rank - 1));
  if (game_context) p = clamp01(p * prof.carelessness_factor);
  return p;
}

inline std::int64_t response_duration_ms(const PlayerProfile& prof, rng::Engine& eng) {
  const double seconds = eng.log_normal(prof.response_time.median_s, prof.response_time.dispersion);
  const double clamped = std::min(std::max(seconds, 0.5), 300.0);
  return std::llround(clamped * 1000.0);
}

}  // namespace detail

struct SessionLimits {
  std::int64_t max_duration_ms = 25 * 60 * 1000;
};

struct SessionContext {
  std::int64_t start_ms = 0;
  std::uint64_t first_seq = 1;
  int session_index = 1;
  bool force_second_game = false;  // first games session tries both games
  enum class Allowed { both, narratif_only, ludique_only } allowed = Allowed::both;
  games::MazeConfig maze;
};

struct SessionOutput {
  std::vector<metrics::MetricEvent> events;
  std::uint64_t next_seq = 1;
  std::int64_t end_ms = 0;
};

namespace detail {

// One scheduled period of game play for one player.
class SessionRun {
 public:
  SessionRun(const PlayerProfile& prof, cards::Scheduler& sched, std::uint64_t seed,
             SessionLimits limits, const SessionContext& ctx)
      : prof_(prof),
        sched_(sched),
        ctx_(ctx),
        eng_(rng::derive(seed, "session")),
        t_(ctx.start_ms),
        deadline_(ctx.start_ms + limits.max_duration_ms),
        seq_(ctx.first_seq),
        seed_(seed) {}

  SessionOutput run(GameKind first_game) {
    emit(metrics::EventId::GAME_START, {{"value", true}});
    if (deadline_ <= ctx_.start_ms) {
      emit(metrics::EventId::GAME_END, {{"value", true}});
      return finish();
    }
    advance(eng_.range(500, 2000));
    emit(metrics::EventId::MAIN_MENU_START, {{"value", true}});
    GameKind next_game = first_game;
    int launches = 0;
    while (time_left()) {
      advance(eng_.range(1000, 4000));  // browsing the menu
      if (!time_left()) break;
      emit(metrics::EventId::MAIN_MENU_QUIT, {{"value", true}});
      if (next_game == GameKind::narratif)
        run_narrative();
      else
        run_labyrinth(launches);
      ++launches;
      if (!time_left()) break;
      advance(eng_.range(500, 1500));
      emit(metrics::EventId::MAIN_MENU_START, {{"value", true}});
      if (ctx_.force_second_game && launches == 1 &&
          ctx_.allowed == SessionContext::Allowed::both) {
        next_game = first_game == GameKind::narratif ? GameKind::ludique : GameKind::narratif;
      } else {
        if (!eng_.bernoulli(prof_.replay_propensity)) break;
        next_game = draw_game();
      }
    }
    emit(metrics::EventId::GAME_END, {{"value", true}});
    return finish();
  }

 private:
  SessionOutput finish() {
    SessionOutput out;
    out.events = std::move(events_);
    out.next_seq = seq_;
    out.end_ms = t_;
    return out;
  }

  bool time_left() const { return t_ < deadline_; }
  void advance(std::int64_t ms) { t_ += ms; }

  void emit(metrics::EventId id, metrics::Payload payload) {
    events_.push_back({t_, seq_++, prof_.player_id, id, std::move(payload)});
  }

  GameKind draw_game() {
    switch (ctx_.allowed) {
      case SessionContext::Allowed::narratif_only: return GameKind::narratif;
      case SessionContext::Allowed::ludique_only: return GameKind::ludique;
      case SessionContext::Allowed::both: break;
    }
    return eng_.uniform() < prof_.preference_narratif ? GameKind::narratif : GameKind::ludique;
  }

  // Serves one card (scheduler first, completed cards as filler once the
  // file offers nothing this session), emits the question sequence and
  // returns the outcome plus the wall time it took.
  struct QuestionResult {
    cards::AnswerOutcome outcome;
    std::int64_t elapsed_ms = 0;
  };

  QuestionResult ask_question() {
    const std::int64_t before = t_;
    const auto next = sched_.next_card(ctx_.session_index);
    const bool scheduled = next.kind == cards::Scheduler::Next::Kind::card;
    const cards::Card card =
        scheduled ? *next.card
                  : sched_.current_deck().by_index(static_cast<int>(eng_.range(1, 48)));

    const double p = accuracy(prof_, card.index_in_file, /*game_context=*/true);
    const bool correct = eng_.bernoulli(p);
    int choice = card.correct_choice;
    if (!correct) {
      choice = static_cast<int>(eng_.range(1, card.num_choices - 1));
      if (choice >= card.correct_choice) ++choice;
    }
    const std::int64_t duration = response_duration_ms(prof_, eng_);

    emit(metrics::EventId::QUESTION_START, {{"value", true}});
    const std::int64_t start = t_;
    t_ = start + duration * 3 / 10;
    emit(metrics::EventId::QUESTION_EXAMPLE, {{"image", card.example_ref}});
    t_ = start + duration * 11 / 20;
    emit(metrics::EventId::QUESTION_QCM, {{"value", true}});
    t_ = start + duration;
    emit(metrics::EventId::QUESTION_ANSWER,
         {{"card", card.card_id},
          {"choice", static_cast<std::int64_t>(choice)},
          {"correct", correct}});
    if (scheduled) sched_.record_answer(card, choice);

    const double pause_p = prof_.pause_rate_per_min * (static_cast<double>(duration) / 60000.0);
    if (eng_.bernoulli(pause_p)) {
      emit(metrics::EventId::GAME_PAUSE, {{"value", true}});
      advance(eng_.range(5000, 30000));
      emit(metrics::EventId::GAME_PAUSE, {{"value", false}});
    }
    return {{correct}, t_ - before};
  }

  std::vector<cards::AnswerOutcome> ask_series(int count) {
    std::vector<cards::AnswerOutcome> outcomes;
    outcomes.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) outcomes.push_back(ask_question().outcome);
    return outcomes;
  }

  void run_narrative() {
    emit(metrics::EventId::STORY_START, {{"value", true}});
    games::NarrativeState story;
    for (int scene = 1; scene <= games::kNarrativeQuests; ++scene) {
      if (!time_left()) return;  // abandoned; closed by the next start or GAME_END
      emit(metrics::EventId::STORY_SCENE_START, {{"scene", static_cast<std::int64_t>(scene)}});
      advance(eng_.range(2000, 6000));  // dialogue
      const auto result = ask_question();
      story = games::narrative_advance(story, result.outcome.correct);
      emit(metrics::EventId::STORY_SCENE_END, {{"scene", static_cast<std::int64_t>(scene)}});
    }
    if (!time_left()) return;
    emit(metrics::EventId::STORY_SCENE_START,
         {{"scene", static_cast<std::int64_t>(games::kNarrativeScenes)}});
    advance(eng_.range(2000, 6000));
    emit(metrics::EventId::STORY_SCENE_END,
         {{"scene", static_cast<std::int64_t>(games::kNarrativeScenes)}});
    emit(metrics::EventId::STORY_END_SEQUENCE, {{"value", true}});
  }

  void emit_game_events(const std::vector<games::GameEvent>& game_events) {
    for (const auto& ge : game_events) emit(ge.id, ge.payload);
  }

  void run_labyrinth(int launch_number) {
    games::MazeGame game(
        rng::derive(rng::derive(seed_, "maze"), static_cast<std::uint64_t>(launch_number)),
        ctx_.maze);
    emit(metrics::EventId::LABYRINTHE_START, {{"value", true}});
    emit_game_events(game.begin_level_events());

    bool attempt_bonus = eng_.bernoulli(prof_.bonus_affinity);
    while (time_left()) {
      const maze::Cell target = pick_target(game, attempt_bonus);
      auto path = maze::shortest_path(game.level(), game.avatar(), target);
      bool replan = false;
      for (const maze::Direction dir : path) {
        if (!time_left()) return;  // stopped mid-level; no LABYRINTHE_END
        const auto moved = game.move(dir);
        const std::int64_t step_ms = eng_.range(350, 650);
        advance(step_ms);
        game.tick(step_ms);
        emit_game_events(moved.events);
        if (moved.entered == games::CellContent::none) continue;

        if (moved.entered == games::CellContent::key) {
          const std::int64_t before = t_;
          const auto outcomes = ask_series(ctx_.maze.questions_per_pickup);
          game.tick(t_ - before);
          game.resolve_key(outcomes);
          replan = true;
          break;
        }
        if (moved.entered == games::CellContent::bonus) {
          const std::int64_t before = t_;
          const auto outcomes = ask_series(ctx_.maze.questions_per_pickup);
          game.tick(t_ - before);
          game.resolve_bonus(outcomes);
          attempt_bonus = false;  // one deliberate try per level
          replan = true;
          break;
        }
        // Door cell. Only take the exit when the door is the actual target;
        // crossing it on the way to a pickup just logs the collision.
        if (!(target == game.level().door)) continue;
        const auto exit = game.try_exit();
        if (exit == games::MazeGame::ExitResult::level_advance) {
          emit_game_events(game.begin_level_events());
          attempt_bonus = eng_.bernoulli(prof_.bonus_affinity);
          replan = true;
          break;
        }
        if (exit == games::MazeGame::ExitResult::game_complete) {
          emit(metrics::EventId::LABYRINTHE_END, {{"value", true}});
          return;
        }
      }
      if (!replan && !path.empty()) continue;
      if (path.empty()) {
        // Already standing on the target; trigger by stepping off and back.
        // Cannot happen with distinct spawn/door/key/bonus cells and replan
        // after every resolution, but guard against a zero-length plan.
        return;
      }
    }
  }

  maze::Cell pick_target(const games::MazeGame& game, bool attempt_bonus) const {
    const auto& level = game.level();
    if (!level.keys.empty()) {
      // Nearest key; ties broken by key order.
      std::size_t best = 0;
      std::size_t best_len = SIZE_MAX;
      for (std::size_t i = 0; i < level.keys.size(); ++i) {
        const auto len = maze::shortest_path(level, game.avatar(), level.keys[i]).size();
        if (len < best_len) {
          best_len = len;
          best = i;
        }
      }
      return level.keys[best];
    }
    if (attempt_bonus && level.bonus) return *level.bonus;
    return level.door;
  }

  const PlayerProfile& prof_;
  cards::Scheduler& sched_;
  SessionContext ctx_;
  rng::Engine eng_;
  std::int64_t t_;
  std::int64_t deadline_;
  std::uint64_t seq_;
  std::uint64_t seed_;
  std::vector<metrics::MetricEvent> events_;
};

}  // namespace detail

// One scheduled game session: a well-formed event stream (menu bracketing,
// question sequences, game events) driven by the profile, ending on story
// or labyrinth completion, replay exhaustion or the time limit.
inline SessionOutput simulate_session(const PlayerProfile& profile, cards::Scheduler& scheduler,
                                      GameKind game_choice, std::uint64_t seed,
                                      SessionLimits limits, const SessionContext& ctx) {
  detail::SessionRun run(profile, scheduler, seed, limits, ctx);
  return run.run(game_choice);
}

// One worksheet session: no events, answer records only. Accuracy uses the
// plain (non-game) context, so no carelessness multiplier applies.
inline std::vector<cards::PaperAnswerRecord> simulate_paper_session(
    const PlayerProfile& profile, cards::Scheduler& scheduler, int session_index,
    std::uint64_t seed, SessionLimits limits) {
  rng::Engine eng(rng::derive(seed, "paper"));
  std::vector<cards::PaperAnswerRecord> records;
  std::int64_t t = 0;
  while (t < limits.max_duration_ms) {
    const auto next = scheduler.next_card(session_index);
    if (next.kind != cards::Scheduler::Next::Kind::card) break;  // worksheets are not replayed
    const cards::Card& card = *next.card;
    const double p = detail::accuracy(profile, card.index_in_file, /*game_context=*/false);
    const bool correct = eng.bernoulli(p);
    int choice = card.correct_choice;
    if (!correct) {
      choice = static_cast<int>(eng.range(1, card.num_choices - 1));
      if (choice >= card.correct_choice) ++choice;
    }
    scheduler.record_answer(card, choice);
    records.push_back({profile.player_id, card.card_id, correct});
    // fetching the card, marking the answer sheet, waiting for correction
    t += detail::response_duration_ms(profile, eng) + eng.range(20000, 90000);
  }
  return records;
}

struct CohortOutput {
  metrics::LogDocument merged;  // sorted by (player_id, seq)
  std::vector<cards::PaperAnswerRecord> paper_records;
};

namespace detail {

struct PlayerOutput {
  std::vector<metrics::MetricEvent> events;
  std::vector<cards::PaperAnswerRecord> paper_records;
};

inline PlayerOutput simulate_player(const SimConfig& config, const PlayerProfile& prof) {
  PlayerOutput out;
  const std::uint64_t player_seed = rng::derive(config.master_seed, prof.player_id);
  cards::Scheduler scheduler(prof.player_id, config.deck2, config.deck3);
  cards::Scheduler paper_scheduler(prof.player_id, config.deck2, config.deck3);
  std::uint64_t seq = 1;
  bool had_games_session = false;

  for (const SessionSpec& spec : config.schedule) {
    const Activity activity = prof.group == "A" ? spec.group_a : spec.group_b;
    if (activity == Activity::none) continue;
    const std::uint64_t session_seed =
        rng::derive(player_seed, static_cast<std::uint64_t>(spec.session_index));
    SessionLimits limits{static_cast<std::int64_t>(std::llround(spec.minutes * 60000.0))};

    if (activity == Activity::paper) {
      if (paper_scheduler.file_complete() &&
          paper_scheduler.current_file_level() == cards::kFirstFileLevel)
        paper_scheduler.promote();
      auto records = simulate_paper_session(prof, paper_scheduler, spec.session_index,
                                            session_seed, limits);
      out.paper_records.insert(out.paper_records.end(), records.begin(), records.end());
      continue;
    }

    if (scheduler.file_complete() && scheduler.current_file_level() == cards::kFirstFileLevel)
      scheduler.promote();

    SessionContext ctx;
    ctx.start_ms = config.start_epoch_ms +
                   static_cast<std::int64_t>(spec.session_index - 1) * 86400000LL;
    ctx.first_seq = seq;
    ctx.session_index = spec.session_index;
    ctx.maze = {config.level_count, config.questions_per_pickup};
    GameKind first_game = GameKind::narratif;
    switch (activity) {
      case Activity::narratif:
        ctx.allowed = SessionContext::Allowed::narratif_only;
        first_game = GameKind::narratif;
        break;
      case Activity::ludique:
        ctx.allowed = SessionContext::Allowed::ludique_only;
        first_game = GameKind::ludique;
        break;
      default: {
        ctx.allowed = SessionContext::Allowed::both;
        ctx.force_second_game = config.force_both_games_first_session && !had_games_session;
        rng::Engine choice_eng(rng::derive(session_seed, "choice"));
        first_game = choice_eng.uniform() < prof.preference_narratif ? GameKind::narratif
                                                                     : GameKind::ludique;
        break;
      }
    }
    had_games_session = true;
    auto session = simulate_session(prof, scheduler, first_game, session_seed, limits, ctx);
    seq = session.next_seq;
    out.events.insert(out.events.end(), session.events.begin(), session.events.end());
  }
  return out;
}

}  // namespace detail

// Full cohort over the schedule. Players are independent given the seed
// split, so they run in parallel; the merged log is sorted by
// (player_id, seq) and identical whatever the execution order.
inline CohortOutput simulate_cohort(const SimConfig& config) {
  config.validate();
  std::vector<std::future<detail::PlayerOutput>> futures;
  futures.reserve(config.profiles.size());
  for (const PlayerProfile& prof : config.profiles)
    futures.push_back(std::async(std::launch::async,
                                 [&config, &prof] { return detail::simulate_player(config, prof); }));

  CohortOutput out;
  out.merged.source = "simulate_cohort";
  for (auto& f : futures) {
    detail::PlayerOutput player = f.get();
    out.merged.events.insert(out.merged.events.end(), player.events.begin(), player.events.end());
    out.paper_records.insert(out.paper_records.end(), player.paper_records.begin(),
                             player.paper_records.end());
  }
  metrics::sort_events(out.merged.events);
  std::stable_sort(out.paper_records.begin(), out.paper_records.end(),
                   [](const auto& a, const auto& b) { return a.player_id < b.player_id; });
  return out;
}

// --- config file ------------------------------------------------------------

namespace detail {

inline double json_number(const nlohmann::json& j, const std::string& key, double lo, double hi,
                          const std::string& where) {
  if (!j.contains(key)) throw ValidationError("config: missing " + where + key);
  if (!j[key].is_number())
    throw ValidationError("config: " + where + key + " must be a number");
  const double v = j[key].get<double>();
  if (v < lo || v > hi)
    throw ValidationError("config: " + where + key + " outside [" + std::to_string(lo) + "," +
                          std::to_string(hi) + "]");
  return v;
}

inline Activity parse_activity(const std::string& raw, const std::string& where) {
  if (raw == "games") return Activity::games;
  if (raw == "narratif") return Activity::narratif;
  if (raw == "ludique") return Activity::ludique;
  if (raw == "paper") return Activity::paper;
  if (raw == "none") return Activity::none;
  throw ValidationError("config: " + where +
                        " must be one of games|narratif|ludique|paper|none, got '" + raw + "'");
}

}  // namespace detail

inline SimConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  SimConfig config;
  if (j.contains("master_seed")) {
    if (!j["master_seed"].is_number_unsigned() && !j["master_seed"].is_number_integer())
      throw ValidationError("config: master_seed must be an integer");
    config.master_seed = j["master_seed"].get<std::uint64_t>();
  }
  if (j.contains("level_count"))
    config.level_count = static_cast<int>(detail::json_number(j, "level_count", 1, 5, ""));
  if (j.contains("questions_per_pickup"))
    config.questions_per_pickup =
        static_cast<int>(detail::json_number(j, "questions_per_pickup", 1, 10, ""));
  if (j.contains("force_both_games_first_session")) {
    if (!j["force_both_games_first_session"].is_boolean())
      throw ValidationError("config: force_both_games_first_session must be a boolean");
    config.force_both_games_first_session = j["force_both_games_first_session"].get<bool>();
  }
  if (j.contains("start_epoch_ms")) {
    if (!j["start_epoch_ms"].is_number_integer() && !j["start_epoch_ms"].is_number_unsigned())
      throw ValidationError("config: start_epoch_ms must be an integer");
    config.start_epoch_ms = j["start_epoch_ms"].get<std::int64_t>();
    if (config.start_epoch_ms < 0) throw ValidationError("config: start_epoch_ms must be >= 0");
  }
  if (j.contains("deck_files")) {
    const auto& decks = j["deck_files"];
    if (!decks.is_object())
      throw ValidationError("config: deck_files must be an object with level2/level3 paths");
    auto load = [&](const char* key) {
      const std::filesystem::path given = decks.at(key).get<std::string>();
      const std::filesystem::path path = given.is_absolute() ? given : base_dir / given;
      std::ifstream in(path);
      if (!in) throw ValidationError("config: cannot open deck file " + path.string());
      return cards::load_deck(in);
    };
    if (decks.contains("level2")) config.deck2 = load("level2");
    if (decks.contains("level3")) config.deck3 = load("level3");
  }

  if (!j.contains("profiles") || !j["profiles"].is_array())
    throw ValidationError("config: profiles must be an array");
  std::size_t index = 0;
  for (const auto& pj : j["profiles"]) {
    const std::string where = "profiles[" + std::to_string(index) + "].";
    PlayerProfile p;
    if (!pj.contains("player_id") || !pj["player_id"].is_string())
      throw ValidationError("config: " + where + "player_id must be a string");
    p.player_id = pj["player_id"].get<std::string>();
    if (!pj.contains("group") || !pj["group"].is_string())
      throw ValidationError("config: " + where + "group must be a string");
    p.group = pj["group"].get<std::string>();
    p.p_correct_base = detail::json_number(pj, "p_correct_base", 0, 1, where);
    if (pj.contains("p_correct_slope"))
      p.p_correct_slope = detail::json_number(pj, "p_correct_slope", 0, 1, where);
    p.response_time.median_s = detail::json_number(pj, "response_median_s", 0.001, 600, where);
    if (pj.contains("response_dispersion"))
      p.response_time.dispersion = detail::json_number(pj, "response_dispersion", 0, 5, where);
    p.preference_narratif = detail::json_number(pj, "preference_narratif", 0, 1, where);
    p.preference_ludique = detail::json_number(pj, "preference_ludique", 0, 1, where);
    if (pj.contains("replay_propensity"))
      p.replay_propensity = detail::json_number(pj, "replay_propensity", 0, 1, where);
    if (pj.contains("carelessness_factor"))
      p.carelessness_factor = detail::json_number(pj, "carelessness_factor", 1e-9, 1, where);
    if (pj.contains("pause_rate_per_min"))
      p.pause_rate_per_min = detail::json_number(pj, "pause_rate_per_min", 0, 60, where);
    if (pj.contains("bonus_affinity"))
      p.bonus_affinity = detail::json_number(pj, "bonus_affinity", 0, 1, where);
    config.profiles.push_back(std::move(p));
    ++index;
  }

  if (!j.contains("schedule") || !j["schedule"].is_array())
    throw ValidationError("config: schedule must be an array");
  index = 0;
  for (const auto& sj : j["schedule"]) {
    const std::string where = "schedule[" + std::to_string(index) + "].";
    SessionSpec s;
    s.session_index = static_cast<int>(detail::json_number(sj, "session_index", 1, 100000, where));
    s.minutes = detail::json_number(sj, "minutes", 0, 24 * 60, where);
    if (sj.contains("group_a"))
      s.group_a = detail::parse_activity(sj["group_a"].get<std::string>(), where + "group_a");
    if (sj.contains("group_b"))
      s.group_b = detail::parse_activity(sj["group_b"].get<std::string>(), where + "group_b");
    config.schedule.push_back(s);
    ++index;
  }

  config.validate();
  return config;
}

inline SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: invalid JSON: " + std::string(e.what()));
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace qcm::sim
