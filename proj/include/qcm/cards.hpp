#pragma once

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "qcm/errors.hpp"

// Auto-corrective reading-card files and the per-player scheduling policy:
// cards are served in difficulty order, a wrong answer queues the card for
// retry in a later session, a file is complete once all 48 cards have been
// answered correctly, and completing the level-2 file promotes to level 3.

namespace qcm::cards {

inline constexpr int kCardsPerFile = 48;
inline constexpr int kMinChoices = 3;
inline constexpr int kMaxChoices = 6;
inline constexpr int kFirstFileLevel = 2;
inline constexpr int kLastFileLevel = 3;

struct Card {
  std::string card_id;
  int file_level = kFirstFileLevel;
  int index_in_file = 1;  // difficulty rank, 1..48
  int num_choices = kMinChoices;
  int correct_choice = 1;
  std::string example_ref;  // illustration shown before the question

  bool operator==(const Card&) const = default;
};

inline void validate_card(const Card& c) {
  if (c.card_id.empty()) throw ValidationError("card has empty card_id");
  if (c.file_level < kFirstFileLevel || c.file_level > kLastFileLevel)
    throw ValidationError("card " + c.card_id + ": file_level " +
                          std::to_string(c.file_level) + " outside 2..3");
  if (c.index_in_file < 1 || c.index_in_file > kCardsPerFile)
    throw ValidationError("card " + c.card_id + ": index_in_file " +
                          std::to_string(c.index_in_file) + " outside 1..48");
  if (c.num_choices < kMinChoices || c.num_choices > kMaxChoices)
    throw ValidationError("card " + c.card_id + ": num_choices " +
                          std::to_string(c.num_choices) + " outside 3..6");
  if (c.correct_choice < 1 || c.correct_choice > c.num_choices)
    throw ValidationError("card " + c.card_id + ": correct_choice " +
                          std::to_string(c.correct_choice) + " outside 1.." +
                          std::to_string(c.num_choices));
}

// One reading file: exactly 48 cards in strictly increasing difficulty order.
class Deck {
 public:
  static Deck from_cards(std::vector<Card> cards) {
    if (cards.size() != kCardsPerFile)
      throw ValidationError("expected 48 cards, got " + std::to_string(cards.size()));
    for (const Card& c : cards) validate_card(c);
    const int level = cards.front().file_level;
    for (const Card& c : cards)
      if (c.file_level != level)
        throw ValidationError("card " + c.card_id + ": file_level " +
                              std::to_string(c.file_level) +
                              " does not match deck level " + std::to_string(level));
    std::sort(cards.begin(), cards.end(),
              [](const Card& a, const Card& b) { return a.index_in_file < b.index_in_file; });
    for (std::size_t i = 1; i < cards.size(); ++i)
      if (cards[i].index_in_file == cards[i - 1].index_in_file)
        throw ValidationError("duplicate index_in_file " +
                              std::to_string(cards[i].index_in_file) + " at card " +
                              cards[i].card_id);
    std::set<std::string> ids;
    for (const Card& c : cards)
      if (!ids.insert(c.card_id).second)
        throw ValidationError("duplicate card_id " + c.card_id);
    Deck d;
    d.file_level_ = level;
    d.cards_ = std::move(cards);
    return d;
  }

  int file_level() const { return file_level_; }
  const std::vector<Card>& cards() const { return cards_; }

  // index is the 1-based difficulty rank.
  const Card& by_index(int index) const { return cards_.at(static_cast<std::size_t>(index - 1)); }

  const Card* find(std::string_view card_id) const {
    for (const Card& c : cards_)
      if (c.card_id == card_id) return &c;
    return nullptr;
  }

 private:
  int file_level_ = kFirstFileLevel;
  std::vector<Card> cards_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
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

inline int parse_int_field(const std::string& value, const std::string& what, int entry_no) {
  if (value.empty()) throw ValidationError("entry " + std::to_string(entry_no) + ": empty " + what);
  for (char ch : value)
    if (ch < '0' || ch > '9')
      throw ValidationError("entry " + std::to_string(entry_no) + ": non-numeric " + what +
                            " '" + value + "'");
  return std::stoi(value);
}

}  // namespace detail

inline constexpr const char* kDeckCsvHeader =
    "card_id,file_level,index_in_file,num_choices,correct_choice,example_ref";

// Card-description document: CSV with the header above, one row per card,
// exactly 48 rows for one file level. Fields must not contain commas.
inline Deck load_deck(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty card document");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDeckCsvHeader)
    throw ValidationError("bad card document header: '" + line + "'");
  std::vector<Card> cards;
  int entry_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++entry_no;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw ValidationError("entry " + std::to_string(entry_no) + ": expected 6 fields, got " +
                            std::to_string(fields.size()));
    Card c;
    c.card_id = fields[0];
    c.file_level = detail::parse_int_field(fields[1], "file_level", entry_no);
    c.index_in_file = detail::parse_int_field(fields[2], "index_in_file", entry_no);
    c.num_choices = detail::parse_int_field(fields[3], "num_choices", entry_no);
    c.correct_choice = detail::parse_int_field(fields[4], "correct_choice", entry_no);
    c.example_ref = fields[5];
    validate_card(c);
    cards.push_back(std::move(c));
  }
  return Deck::from_cards(std::move(cards));
}

inline void write_deck(const Deck& deck, std::ostream& out) {
  out << kDeckCsvHeader << '\n';
  for (const Card& c : deck.cards()) {
    out << c.card_id << ',' << c.file_level << ',' << c.index_in_file << ',' << c.num_choices
        << ',' << c.correct_choice << ',' << c.example_ref << '\n';
  }
}

// Built-in synthetic deck used when no card document is supplied. The
// pattern is fixed (not seeded) so ids and answers are stable across runs.
inline Deck make_default_deck(int file_level) {
  std::vector<Card> cards;
  cards.reserve(kCardsPerFile);
  for (int i = 1; i <= kCardsPerFile; ++i) {
    Card c;
    char id[16];
    std::snprintf(id, sizeof id, "L%d-%02d", file_level, i);
    c.card_id = id;
    c.file_level = file_level;
    c.index_in_file = i;
    c.num_choices = kMinChoices + (i * 7 + file_level) % 4;
    c.correct_choice = 1 + (i * 3 + file_level) % c.num_choices;
    c.example_ref = std::string("img/") + id + ".png";
    cards.push_back(std::move(c));
  }
  return Deck::from_cards(std::move(cards));
}

struct AnswerOutcome {
  bool correct = false;
};

struct AnswerRecord {
  std::string card_id;
  int choice = 0;
  bool correct = false;
  int session_index = 0;
};

enum class CardStatus { unseen, correct, pending_retry };

struct Bilan {
  std::vector<std::pair<std::string, CardStatus>> cards;  // all 48, difficulty order
  int unseen = 0;
  int correct = 0;
  int pending_retry = 0;
};

// Per-player scheduling over the level-2 then level-3 file.
//
// Serving policy: the head of the retry queue is served when it was failed
// in a strictly earlier session (a failed card never repeats within its own
// session); otherwise the lowest-index unseen card. When neither is
// servable the session is exhausted; the file is complete once all 48
// cards have been answered correctly.
class Scheduler {
 public:
  struct Next {
    enum class Kind { card, file_complete, session_exhausted };
    Kind kind = Kind::session_exhausted;
    std::optional<Card> card;
  };

  Scheduler(std::string player_id, Deck level2, Deck level3)
      : player_id_(std::move(player_id)),
        deck2_(std::move(level2)),
        deck3_(std::move(level3)) {
    if (deck2_.file_level() != kFirstFileLevel || deck3_.file_level() != kLastFileLevel)
      throw ValidationError("scheduler needs a level-2 and a level-3 deck");
  }

  const std::string& player_id() const { return player_id_; }
  int current_file_level() const { return level_; }
  const Deck& current_deck() const { return level_ == kFirstFileLevel ? deck2_ : deck3_; }
  int cursor() const { return cursor_; }
  int current_session() const { return session_; }

  bool file_complete() const {
    return static_cast<int>(completed_.size()) == kCardsPerFile;
  }

  const std::vector<AnswerRecord>& answer_log() const { return log_; }
  const std::set<std::string>& completed() const { return completed_; }

  std::vector<std::string> retry_queue() const {
    std::vector<std::string> ids;
    ids.reserve(retry_.size());
    for (const auto& e : retry_) ids.push_back(e.card_id);
    return ids;
  }

  Next next_card(int session_index) {
    session_ = std::max(session_, session_index);
    return peek(session_index);
  }

  // Records the answer for the card currently being served. Correct moves
  // the card to the completed set (leaving the retry queue if present);
  // wrong appends it to the retry queue for a later session.
  AnswerOutcome record_answer(const Card& card, int choice) {
    if (choice < 1 || choice > card.num_choices)
      throw ValidationError("choice " + std::to_string(choice) + " outside 1.." +
                            std::to_string(card.num_choices) + " for card " + card.card_id);
    const Next now = peek(session_);
    if (now.kind != Next::Kind::card || now.card->card_id != card.card_id)
      throw PreconditionError("card " + card.card_id + " was not served to this player");

    const bool correct = choice == card.correct_choice;
    const bool was_retry = !retry_.empty() && retry_.front().card_id == card.card_id;
    if (was_retry) {
      retry_.erase(retry_.begin());
    } else {
      ++cursor_;  // consumed the unseen head
    }
    if (correct) {
      completed_.insert(card.card_id);
    } else {
      retry_.push_back({card.card_id, session_});
    }
    log_.push_back({card.card_id, choice, correct, session_});
    return {correct};
  }

  // Moves to the level-3 file once level 2 is complete. Per-file progress
  // resets; the answer log is kept.
  void promote() {
    if (!file_complete())
      throw PreconditionError("cannot promote: file level " + std::to_string(level_) +
                              " is not complete");
    if (level_ == kLastFileLevel) throw PreconditionError("no higher file");
    level_ = kLastFileLevel;
    cursor_ = 1;
    retry_.clear();
    completed_.clear();
  }

  // Status of every card in the current file: unseen / correct / pending retry.
  Bilan bilan() const {
    std::set<std::string> pending;
    for (const auto& e : retry_) pending.insert(e.card_id);
    Bilan b;
    for (const Card& c : current_deck().cards()) {
      CardStatus st = CardStatus::unseen;
      if (completed_.count(c.card_id))
        st = CardStatus::correct;
      else if (pending.count(c.card_id))
        st = CardStatus::pending_retry;
      switch (st) {
        case CardStatus::unseen: ++b.unseen; break;
        case CardStatus::correct: ++b.correct; break;
        case CardStatus::pending_retry: ++b.pending_retry; break;
      }
      b.cards.emplace_back(c.card_id, st);
    }
    return b;
  }

 private:
  struct RetryEntry {
    std::string card_id;
    int enqueued_session = 0;
  };

  Next peek(int session_index) const {
    if (file_complete()) return {Next::Kind::file_complete, std::nullopt};
    // Failure order is preserved, so enqueue sessions are non-decreasing
    // along the queue and checking the head suffices.
    if (!retry_.empty() && retry_.front().enqueued_session < session_index) {
      const Card* c = current_deck().find(retry_.front().card_id);
      return {Next::Kind::card, *c};
    }
    if (cursor_ <= kCardsPerFile) return {Next::Kind::card, current_deck().by_index(cursor_)};
    return {Next::Kind::session_exhausted, std::nullopt};
  }

  std::string player_id_;
  Deck deck2_;
  Deck deck3_;
  int level_ = kFirstFileLevel;
  int cursor_ = 1;  // next unseen difficulty rank
  int session_ = 0;
  std::vector<RetryEntry> retry_;
  std::set<std::string> completed_;
  std::vector<AnswerRecord> log_;
};

// An answer given outside the event-logged context (worksheet sessions);
// these enter analytics through a plain CSV since they produce no events.
struct PaperAnswerRecord {
  std::string player_id;
  std::string card_id;
  bool correct = false;

  bool operator==(const PaperAnswerRecord&) const = default;
};

}  // namespace qcm::cards
