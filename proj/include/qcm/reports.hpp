#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qcm/analytics.hpp"
#include "qcm/errors.hpp"

// CSV/SVG renderings of the analytics outputs. Output is byte-deterministic
// for identical inputs: fixed column order, fixed float formatting ('.'
// decimal separator, 4-decimal rates), sorted rows, no timestamps.

namespace qcm::reports {

namespace detail {

inline std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline const char* group_color(std::size_t index) {
  static constexpr const char* palette[] = {"#4C78A8", "#F58518", "#54A24B",
                                            "#E45756", "#72B7B2", "#B279A2"};
  return palette[index % (sizeof palette / sizeof palette[0])];
}

}  // namespace detail

inline void write_students_csv(const std::vector<analytics::StudentReport>& reports,
                               std::ostream& out) {
  out << "player_id,total_answers,correct,errors,error_rate,unique_cards_correct,"
         "median_response_time_s,sessions,narrative_launches,ludic_launches\n";
  auto rows = reports;
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.player_id < b.player_id; });
  for (const auto& r : rows) {
    out << r.player_id << ',' << r.total_answers << ',' << (r.total_answers - r.errors) << ','
        << r.errors << ',' << detail::fmt(r.error_rate, 4) << ',' << r.unique_cards_correct
        << ',';
    if (r.median_response_time_s) out << detail::fmt(*r.median_response_time_s, 3);
    out << ',' << r.sessions.size() << ',' << r.narrative_launches << ',' << r.ludic_launches
        << '\n';
  }
}

inline void write_cards_csv(const std::vector<analytics::CardReport>& reports,
                            std::ostream& out) {
  out << "card_id,attempts,errors,error_rate,wrong_choice_1,wrong_choice_2,wrong_choice_3,"
         "wrong_choice_4,wrong_choice_5,wrong_choice_6\n";
  for (const auto& r : reports) {
    out << r.card_id << ',' << r.attempts << ',' << r.errors << ','
        << detail::fmt(r.error_rate, 4);
    for (int choice = 1; choice <= 6; ++choice) {
      const auto it = r.wrong_choice_histogram.find(choice);
      out << ',' << (it != r.wrong_choice_histogram.end() ? it->second : 0);
    }
    out << '\n';
  }
}

inline void write_sessions_csv(const std::vector<analytics::SessionSegment>& segments,
                               std::ostream& out) {
  out << "player_id,game,start_ms,end_ms,duration_ms,completed\n";
  auto rows = segments;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.player_id != b.player_id) return a.player_id < b.player_id;
    return a.start_ms < b.start_ms;
  });
  for (const auto& s : rows) {
    out << s.player_id << ',' << analytics::game_kind_label(s.game_kind) << ',' << s.start_ms
        << ',' << s.end_ms << ',' << (s.end_ms - s.start_ms) << ','
        << (s.completed ? "true" : "false") << '\n';
  }
}

inline void write_totals_csv(const analytics::CohortTotals& totals, std::ostream& out) {
  out << "context,unique_cards_correct,total_answers,errors,error_rate\n";
  out << "papier," << totals.paper.unique_cards_correct << ',' << totals.paper.total_answers
      << ',' << totals.paper.errors << ',' << detail::fmt(totals.paper.error_rate, 4) << '\n';
  out << "numerique," << totals.digital.unique_cards_correct << ','
      << totals.digital.total_answers << ',' << totals.digital.errors << ','
      << detail::fmt(totals.digital.error_rate, 4) << '\n';
}

inline void write_bonus_csv(const analytics::BonusStats& stats, std::ostream& out) {
  out << "captured,available,rate\n";
  out << stats.captured << ',' << stats.available << ',';
  if (stats.rate) out << detail::fmt(*stats.rate, 4);
  out << '\n';
}

// Success rate against median response time, one circle per player with
// radius proportional to the number of answers.
inline void write_scatter_svg(const analytics::SuccessTimeResult& data, std::ostream& out) {
  constexpr int kWidth = 800, kHeight = 600;
  constexpr double kLeft = 60, kRight = 770, kTop = 30, kBottom = 550;
  auto points = data.points;
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.player_id < b.player_id; });

  double max_time = 1.0;
  long max_n = 1;
  std::vector<std::string> groups;
  for (const auto& p : points) {
    max_time = std::max(max_time, p.median_time_s);
    max_n = std::max(max_n, p.n_cards);
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end())
      groups.push_back(p.group);
  }
  std::sort(groups.begin(), groups.end());
  max_time *= 1.05;
  const double radius_scale = 24.0 / static_cast<double>(max_n);

  auto sx = [&](double t) { return kLeft + (kRight - kLeft) * (t / max_time); };
  auto sy = [&](double rate) { return kBottom - (kBottom - kTop) * rate; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"#ffffff\"/>\n";
  out << "<line x1=\"" << detail::fmt(kLeft, 2) << "\" y1=\"" << detail::fmt(kBottom, 2)
      << "\" x2=\"" << detail::fmt(kRight, 2) << "\" y2=\"" << detail::fmt(kBottom, 2)
      << "\" stroke=\"#333333\"/>\n";
  out << "<line x1=\"" << detail::fmt(kLeft, 2) << "\" y1=\"" << detail::fmt(kTop, 2)
      << "\" x2=\"" << detail::fmt(kLeft, 2) << "\" y2=\"" << detail::fmt(kBottom, 2)
      << "\" stroke=\"#333333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double rate = i / 4.0;
    out << "<text x=\"" << detail::fmt(kLeft - 8, 2) << "\" y=\"" << detail::fmt(sy(rate) + 4, 2)
        << "\" font-size=\"11\" text-anchor=\"end\">" << detail::fmt(rate * 100, 0)
        << "%</text>\n";
    const double t = max_time * i / 4.0;
    out << "<text x=\"" << detail::fmt(sx(t), 2) << "\" y=\"" << detail::fmt(kBottom + 18, 2)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << detail::fmt(t, 1) << "s</text>\n";
  }
  out << "<text x=\"" << detail::fmt((kLeft + kRight) / 2, 2) << "\" y=\""
      << detail::fmt(kBottom + 38, 2)
      << "\" font-size=\"12\" text-anchor=\"middle\">median response time</text>\n";
  for (const auto& p : points) {
    std::size_t group_index = 0;
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (groups[g] == p.group) group_index = g;
    out << "<circle cx=\"" << detail::fmt(sx(p.median_time_s), 2) << "\" cy=\""
        << detail::fmt(sy(p.success_rate), 2) << "\" r=\""
        << detail::fmt(radius_scale * static_cast<double>(p.n_cards), 2) << "\" fill=\""
        << detail::group_color(group_index) << "\" fill-opacity=\"0.65\">"
        << "<title>" << p.player_id << "</title></circle>\n";
  }
  out << "</svg>\n";
}

// Per-player timeline of game sessions; one row per player, segment length
// is session duration, color tells the game apart, pale fill = abandoned.
inline void write_timeline_svg(const std::vector<analytics::SessionSegment>& segments,
                               std::ostream& out) {
  auto rows = segments;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.player_id != b.player_id) return a.player_id < b.player_id;
    return a.start_ms < b.start_ms;
  });
  std::vector<std::string> players;
  std::int64_t min_ms = 0, max_ms = 1;
  if (!rows.empty()) {
    min_ms = rows.front().start_ms;
    max_ms = rows.front().end_ms;
  }
  for (const auto& s : rows) {
    if (std::find(players.begin(), players.end(), s.player_id) == players.end())
      players.push_back(s.player_id);
    min_ms = std::min(min_ms, s.start_ms);
    max_ms = std::max(max_ms, s.end_ms);
  }
  if (max_ms <= min_ms) max_ms = min_ms + 1;

  constexpr int kRowHeight = 18, kRowGap = 6, kLeft = 70, kRight = 880;
  const int height = 40 + static_cast<int>(players.size()) * (kRowHeight + kRowGap);
  auto sx = [&](std::int64_t t) {
    return kLeft + (kRight - kLeft) * (static_cast<double>(t - min_ms) /
                                       static_cast<double>(max_ms - min_ms));
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"" << height
      << "\" viewBox=\"0 0 900 " << height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"900\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < players.size(); ++i) {
    const int y = 20 + static_cast<int>(i) * (kRowHeight + kRowGap);
    out << "<text x=\"8\" y=\"" << y + kRowHeight - 5
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << players[i] << "</text>\n";
  }
  for (const auto& s : rows) {
    std::size_t row = 0;
    for (std::size_t i = 0; i < players.size(); ++i)
      if (players[i] == s.player_id) row = i;
    const int y = 20 + static_cast<int>(row) * (kRowHeight + kRowGap);
    const char* color = s.game_kind == analytics::GameKind::narratif ? "#4C78A8" : "#F58518";
    out << "<rect x=\"" << detail::fmt(sx(s.start_ms), 2) << "\" y=\"" << y << "\" width=\""
        << detail::fmt(std::max(1.0, sx(s.end_ms) - sx(s.start_ms)), 2) << "\" height=\""
        << kRowHeight << "\" fill=\"" << color << "\" fill-opacity=\""
        << (s.completed ? "0.9" : "0.45") << "\"/>\n";
  }
  out << "</svg>\n";
}

struct ReportBundle {
  std::optional<std::vector<analytics::StudentReport>> students;
  std::optional<std::vector<analytics::CardReport>> cards;
  std::optional<std::vector<analytics::SessionSegment>> sessions;
  std::optional<analytics::SuccessTimeResult> scatter;
  std::optional<analytics::CohortTotals> totals;
  std::optional<analytics::BonusStats> bonus;
};

// Writes every requested artifact into out_dir; returns the written paths.
inline std::vector<std::filesystem::path> emit_reports(const ReportBundle& bundle,
                                                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const char* name, auto&& writer) {
    const std::filesystem::path path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    writer(out);
    out.flush();
    if (!out) throw ValidationError("failed writing " + path.string());
    written.push_back(path);
  };
  if (bundle.students)
    emit("students.csv", [&](std::ostream& o) { write_students_csv(*bundle.students, o); });
  if (bundle.cards)
    emit("cards.csv", [&](std::ostream& o) { write_cards_csv(*bundle.cards, o); });
  if (bundle.sessions) {
    emit("sessions.csv", [&](std::ostream& o) { write_sessions_csv(*bundle.sessions, o); });
    emit("sessions.svg", [&](std::ostream& o) { write_timeline_svg(*bundle.sessions, o); });
  }
  if (bundle.scatter)
    emit("scatter.svg", [&](std::ostream& o) { write_scatter_svg(*bundle.scatter, o); });
  if (bundle.totals)
    emit("totals.csv", [&](std::ostream& o) { write_totals_csv(*bundle.totals, o); });
  if (bundle.bonus)
    emit("bonus.csv", [&](std::ostream& o) { write_bonus_csv(*bundle.bonus, o); });
  return written;
}

}  // namespace qcm::reports
