#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qcm/cards.hpp"
#include "qcm/errors.hpp"
#include "qcm/maze.hpp"
#include "qcm/metrics.hpp"
#include "qcm/rng.hpp"

// The two dissociated gamification state machines. Both are pure and
// deterministic; everything observable is surfaced as game events that the
// caller stamps into metric records.

namespace qcm::games {

enum class GameKind { narratif, ludique };

inline std::string_view game_kind_label(GameKind k) {
  return k == GameKind::narratif ? "narratif" : "ludique";
}

inline constexpr int kNarrativeScenes = 7;
inline constexpr int kNarrativeQuests = 6;  // scenes 1..6 carry one quest, scene 7 is the finale

// Branching story: one quest per scene, the ending is reached whatever the
// quest outcomes were, and its grade counts the successes.
struct NarrativeState {
  int scene = 1;  // 1..7
  std::vector<bool> quest_results;
  bool ended = false;

  int ending_grade() const {
    int grade = 0;
    for (bool ok : quest_results) grade += ok ? 1 : 0;
    return grade;
  }
};

inline NarrativeState narrative_advance(NarrativeState state, bool quest_outcome) {
  if (state.ended) throw PreconditionError("narrative already ended");
  state.quest_results.push_back(quest_outcome);
  ++state.scene;
  if (state.scene >= kNarrativeScenes) {
    state.scene = kNarrativeScenes;
    state.ended = true;
  }
  return state;
}

// Event intent produced by game logic; timestamp/seq/player are added by
// whoever owns the session.
struct GameEvent {
  metrics::EventId id;
  metrics::Payload payload;
};

enum class CellContent { none, key, bonus, door };

struct MazeConfig {
  int level_count = 5;
  int questions_per_pickup = 2;  // keys and bonus alike
};

inline std::string bonus_collectible_id(int level_number) {
  return "bonus-L" + std::to_string(level_number);
}

// Labyrinth run across level_count procedurally generated levels. Keys are
// gained by answering every pickup question correctly; a miss teleports the
// key to a fresh reachable cell. The door opens only with all keys, the
// chronometer counts up and per-level times feed the final recap.
class MazeGame {
 public:
  explicit MazeGame(std::uint64_t seed, MazeConfig config = {})
      : seed_(seed), config_(config), relocate_eng_(0) {
    if (config_.level_count < maze::kMinLevel || config_.level_count > maze::kMaxLevel)
      throw ValidationError("level_count outside 1..5");
    if (config_.questions_per_pickup < 1)
      throw ValidationError("questions_per_pickup must be >= 1");
    enter_level(1);
  }

  const maze::MazeLevel& level() const { return level_; }
  maze::Cell avatar() const { return avatar_; }
  int keys_held() const { return keys_held_; }
  std::int64_t chronometer_ms() const { return chronometer_ms_; }
  const std::vector<std::int64_t>& per_level_times() const { return per_level_times_; }
  const std::set<std::string>& collected_bonuses() const { return collected_bonuses_; }
  bool complete() const { return complete_; }
  const MazeConfig& config() const { return config_; }

  // Events announcing the level the avatar just entered.
  std::vector<GameEvent> begin_level_events() const {
    std::vector<GameEvent> events;
    events.push_back({metrics::EventId::LABYRINTHE_LEVEL,
                      {{"level", static_cast<std::int64_t>(level_.level_number)}}});
    if (level_.bonus)
      events.push_back({metrics::EventId::LABYRINTHE_BONUS_SPAWN, {{"value", true}}});
    return events;
  }

  struct MoveResult {
    bool moved = false;
    CellContent entered = CellContent::none;
    std::vector<GameEvent> events;
  };

  // A blocked move is a no-op; entering a key/bonus/door cell emits the
  // collision event and reports what was entered so the caller can run the
  // matching resolve step.
  MoveResult move(maze::Direction direction) {
    require_running();
    MoveResult result;
    if (!level_.is_open(avatar_, direction)) return result;
    avatar_ = maze::step(avatar_, direction);
    result.moved = true;
    result.entered = content_at(avatar_);
    switch (result.entered) {
      case CellContent::key:
        result.events.push_back({metrics::EventId::LABYRINTHE_KEY, {{"value", true}}});
        break;
      case CellContent::bonus:
        result.events.push_back({metrics::EventId::LABYRINTHE_BONUS, {{"value", true}}});
        break;
      case CellContent::door:
        result.events.push_back({metrics::EventId::LABYRINTHE_DOOR, {{"value", true}}});
        break;
      case CellContent::none: break;
    }
    return result;
  }

  // Chronometer only counts up.
  void tick(std::int64_t ms) {
    if (ms < 0) throw PreconditionError("chronometer cannot go backwards");
    chronometer_ms_ += ms;
  }

  // All answers correct: the key is taken. Any miss: the key teleports to a
  // uniformly drawn free cell (always reachable; the maze is perfect).
  bool resolve_key(std::span<const cards::AnswerOutcome> outcomes) {
    require_running();
    const auto key_it = std::find(level_.keys.begin(), level_.keys.end(), avatar_);
    if (key_it == level_.keys.end()) throw PreconditionError("avatar is not on a key cell");
    check_outcome_count(outcomes);
    if (all_correct(outcomes)) {
      level_.keys.erase(key_it);
      ++keys_held_;
      return true;
    }
    *key_it = draw_free_cell();
    return false;
  }

  // Both answers correct unlocks the collectible; otherwise the bonus
  // stays where it is.
  bool resolve_bonus(std::span<const cards::AnswerOutcome> outcomes) {
    require_running();
    if (!level_.bonus || !(avatar_ == *level_.bonus))
      throw PreconditionError("avatar is not on the bonus cell");
    check_outcome_count(outcomes);
    if (!all_correct(outcomes)) return false;
    collected_bonuses_.insert(bonus_collectible_id(level_.level_number));
    level_.bonus.reset();
    return true;
  }

  enum class ExitResult { stay, level_advance, game_complete };

  ExitResult try_exit() {
    require_running();
    if (!(avatar_ == level_.door)) throw PreconditionError("avatar is not on the door cell");
    if (keys_held_ < level_.level_number) return ExitResult::stay;
    per_level_times_.push_back(chronometer_ms_);
    if (level_.level_number >= config_.level_count) {
      complete_ = true;
      return ExitResult::game_complete;
    }
    enter_level(level_.level_number + 1);
    return ExitResult::level_advance;
  }

 private:
  void enter_level(int level_number) {
    level_ = maze::generate_maze(rng::derive(seed_, static_cast<std::uint64_t>(level_number)),
                                 level_number);
    avatar_ = level_.spawn;
    keys_held_ = 0;
    chronometer_ms_ = 0;
    relocate_eng_ = rng::Engine(rng::derive(level_.seed, "relocate"));
  }

  void require_running() const {
    if (complete_) throw PreconditionError("game already complete");
  }

  void check_outcome_count(std::span<const cards::AnswerOutcome> outcomes) const {
    if (static_cast<int>(outcomes.size()) != config_.questions_per_pickup)
      throw PreconditionError("expected " + std::to_string(config_.questions_per_pickup) +
                              " answer outcomes, got " + std::to_string(outcomes.size()));
  }

  static bool all_correct(std::span<const cards::AnswerOutcome> outcomes) {
    for (const auto& o : outcomes)
      if (!o.correct) return false;
    return true;
  }

  CellContent content_at(maze::Cell c) const {
    if (c == level_.door) return CellContent::door;
    if (std::find(level_.keys.begin(), level_.keys.end(), c) != level_.keys.end())
      return CellContent::key;
    if (level_.bonus && c == *level_.bonus) return CellContent::bonus;
    return CellContent::none;
  }

  bool cell_occupied(maze::Cell c) const {
    return c == level_.spawn || c == level_.door || c == avatar_ ||
           content_at(c) != CellContent::none;
  }

  maze::Cell draw_free_cell() {
    const auto reachable = maze::reachable_from(level_, level_.spawn);
    for (;;) {
      const maze::Cell c{
          static_cast<int>(relocate_eng_.below(static_cast<std::uint64_t>(level_.width))),
          static_cast<int>(relocate_eng_.below(static_cast<std::uint64_t>(level_.height)))};
      if (cell_occupied(c)) continue;
      if (!reachable[static_cast<std::size_t>(level_.cell_index(c))]) continue;
      return c;
    }
  }

  std::uint64_t seed_;
  MazeConfig config_;
  maze::MazeLevel level_;
  maze::Cell avatar_;
  int keys_held_ = 0;
  std::int64_t chronometer_ms_ = 0;
  std::vector<std::int64_t> per_level_times_;
  std::set<std::string> collected_bonuses_;
  bool complete_ = false;
  rng::Engine relocate_eng_;
};

}  // namespace qcm::games
