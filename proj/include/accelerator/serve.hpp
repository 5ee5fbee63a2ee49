#pragma once

/// Read-only suggestion serving:
///   GET /related?q=<text>  -> {"query": ..., "alternates": [{"q","score","provenance"}]}
///   GET /healthz           -> {"status":"ok","records":n}
/// The store is swapped wholesale behind a shared_ptr, so a request always
/// renders from exactly one snapshot.

#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "accelerator/event_log.hpp"
#include "accelerator/suggestion_store.hpp"

namespace accel {

inline nlohmann::ordered_json related_response_json(const SuggestionRecord& rec) {
    nlohmann::ordered_json j;
    j["query"] = rec.anchor_query;
    j["alternates"] = nlohmann::ordered_json::array();
    for (const auto& alt : rec.alternates) {
        nlohmann::ordered_json a;
        a["q"] = alt.query;
        a["score"] = alt.score;
        a["provenance"] = std::string(to_string(alt.provenance));
        j["alternates"].push_back(std::move(a));
    }
    return j;
}

class RelatedSearchServer {
public:
    explicit RelatedSearchServer(std::shared_ptr<const SuggestionStore> store)
        : store_(std::move(store)) {
        install_routes();
    }

    /// Atomic snapshot reload: in-flight requests keep the store they grabbed.
    void swap_store(std::shared_ptr<const SuggestionStore> next) {
        const std::lock_guard<std::mutex> lock(mutex_);
        store_ = std::move(next);
    }

    std::shared_ptr<const SuggestionStore> current_store() const {
        const std::lock_guard<std::mutex> lock(mutex_);
        return store_;
    }

    /// Blocks serving "host:port" until stop() is called.
    bool listen(const std::string& bind_address) {
        const auto colon = bind_address.rfind(':');
        if (colon == std::string::npos) return false;
        const std::string host = bind_address.substr(0, colon);
        const int port = std::stoi(bind_address.substr(colon + 1));
        return server_.listen(host, port);
    }

    int bind_ephemeral(const std::string& host = "127.0.0.1") {
        return server_.bind_to_any_port(host);
    }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    bool is_running() const { return server_.is_running(); }
    void wait_until_ready() const { server_.wait_until_ready(); }
    void stop() { server_.stop(); }

private:
    void install_routes() {
        server_.Get("/related", [this](const httplib::Request& req, httplib::Response& res) {
            const auto raw = req.get_param_value("q");
            const auto key = try_normalize_query(raw);
            if (key.empty()) {
                res.status = 400;
                res.set_content(R"({"error":"empty_query"})", "application/json");
                return;
            }
            const auto store = current_store();
            const auto rec = store->get(key);
            if (!rec) {
                res.status = 404;
                res.set_content(R"({"error":"not_found"})", "application/json");
                return;
            }
            res.set_content(related_response_json(*rec).dump(), "application/json");
        });
        server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            const auto store = current_store();
            nlohmann::ordered_json j;
            j["status"] = "ok";
            j["records"] = store->size();
            res.set_content(j.dump(), "application/json");
        });
    }

    mutable std::mutex mutex_;
    std::shared_ptr<const SuggestionStore> store_;
    httplib::Server server_;
};

}  // namespace accel
