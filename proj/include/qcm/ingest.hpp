#pragma once

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "qcm/log_store.hpp"

// Telemetry ingestion over HTTP/1.1:
//   POST /logs/{player_id}   body: text/plain serialized metric lines
//                            -> 200 {"accepted":n,"duplicate":n,"rejected":n}
//   GET  /healthz            -> 200 "ok"
// Batches are idempotent per (player_id, seq); malformed lines are counted
// as rejected, never abort the batch.

namespace qcm::ingest {

inline void attach_routes(httplib::Server& server, log_store::LogStore& store) {
  server.Post(R"(/logs/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    const std::string player_id = req.matches[1];
    if (!log_store::LogStore::valid_player_id(player_id)) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", "invalid player id"}}.dump(), "application/json");
      return;
    }
    try {
      const auto counts = store.append_batch(player_id, req.body);
      nlohmann::json body{{"accepted", counts.accepted},
                          {"duplicate", counts.duplicate},
                          {"rejected", counts.rejected}};
      res.status = 200;
      res.set_content(body.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content("ok", "text/plain");
  });
}

}  // namespace qcm::ingest
