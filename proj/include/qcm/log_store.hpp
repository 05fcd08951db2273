#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_set>

#include "qcm/errors.hpp"
#include "qcm/metrics.hpp"

// Durable append-only store for metric logs: one `{player_id}.qcmlog` file
// per player. Ingestion is idempotent on (player_id, seq) — duplicates are
// counted but never re-appended, including across restarts (the existing
// file's seqs are loaded on first touch). Appends for one player are
// serialized; different players append in parallel.

namespace qcm::log_store {

class LogStore {
 public:
  explicit LogStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ValidationError("cannot create log dir " + dir_.string());
  }

  const std::filesystem::path& dir() const { return dir_; }

  // Player ids become file names; keep them to a safe charset.
  static bool valid_player_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
      if (!ok) return false;
    }
    return id != "." && id != "..";
  }

  struct BatchResult {
    long accepted = 0;
    long duplicate = 0;
    long rejected = 0;
  };

  // Body is zero or more serialized metric lines. Each line is validated
  // independently; a bad line is rejected without aborting the batch. Lines
  // whose player_id does not match are rejected too.
  BatchResult append_batch(const std::string& player_id, std::string_view body) {
    if (!valid_player_id(player_id)) throw ValidationError("invalid player id");
    PlayerLog& log = player_log(player_id);
    std::lock_guard<std::mutex> lock(log.mutex);

    BatchResult result;
    std::size_t start = 0;
    while (start <= body.size()) {
      if (start == body.size()) break;
      std::size_t end = body.find('\n', start);
      if (end == std::string_view::npos) end = body.size();
      const std::string_view line = body.substr(start, end - start);
      start = end + 1;
      if (line.empty()) continue;

      metrics::ParseResult parsed = metrics::parse_line(line);
      const metrics::MetricEvent* event = std::get_if<metrics::MetricEvent>(&parsed);
      if (!event || event->player_id != player_id) {
        ++result.rejected;
        continue;
      }
      if (!log.seqs.insert(event->seq).second) {
        ++result.duplicate;
        continue;
      }
      log.out << line << '\n';
      ++result.accepted;
    }
    log.out.flush();
    if (!log.out) throw ValidationError("write failure on " + player_id + ".qcmlog");
    return result;
  }

  void flush_all() {
    std::lock_guard<std::mutex> map_lock(map_mutex_);
    for (auto& [player, log] : players_) {
      std::lock_guard<std::mutex> lock(log->mutex);
      log->out.flush();
    }
  }

 private:
  struct PlayerLog {
    std::mutex mutex;
    std::unordered_set<std::uint64_t> seqs;
    std::ofstream out;
  };

  PlayerLog& player_log(const std::string& player_id) {
    std::lock_guard<std::mutex> map_lock(map_mutex_);
    auto it = players_.find(player_id);
    if (it != players_.end()) return *it->second;

    auto log = std::make_unique<PlayerLog>();
    const std::filesystem::path path = dir_ / (player_id + ".qcmlog");
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      std::string line;
      while (std::getline(in, line)) {
        metrics::ParseResult parsed = metrics::parse_line(line);
        if (const auto* event = std::get_if<metrics::MetricEvent>(&parsed))
          log->seqs.insert(event->seq);
      }
    }
    log->out.open(path, std::ios::binary | std::ios::app);
    if (!log->out) throw ValidationError("cannot open " + path.string());
    return *players_.emplace(player_id, std::move(log)).first->second;
  }

  std::filesystem::path dir_;
  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<PlayerLog>> players_;
};

}  // namespace qcm::log_store
