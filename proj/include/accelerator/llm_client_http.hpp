#pragma once

/// HTTP transport for the alternator. POSTs
///   {"model": ..., "prompt": ..., "max_tokens": n, "temperature": t}
/// to a configurable URL and reads the completion text from a configurable
/// JSON-pointer path in the response body. Transient failures (connect/read
/// errors, timeouts, 429 and 5xx statuses) are retried with exponential
/// backoff; other statuses fail immediately.

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/llm_alternator.hpp"

namespace accel {

struct LlmClientConfig {
    std::string endpoint;  // e.g. "http://127.0.0.1:8080/v1/completions"
    std::string model = "solar-10b-instruct";
    int max_tokens = 256;
    double temperature = 0.0;
    int timeout_ms = 10'000;
    int max_retries = 3;       // retries after the first attempt
    int backoff_base_ms = 200;  // doubles per retry
    std::string completion_path = "/completion";  // JSON pointer into the response body
};

class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(LlmClientConfig cfg) : cfg_(std::move(cfg)) {
        const auto scheme_end = cfg_.endpoint.find("://");
        const auto path_start =
            cfg_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) {
            base_ = cfg_.endpoint;
            path_ = "/";
        } else {
            base_ = cfg_.endpoint.substr(0, path_start);
            path_ = cfg_.endpoint.substr(path_start);
        }
    }

    std::string complete(const std::string& prompt) override {
        nlohmann::ordered_json body;
        body["model"] = cfg_.model;
        body["prompt"] = prompt;
        body["max_tokens"] = cfg_.max_tokens;
        body["temperature"] = cfg_.temperature;
        const std::string payload = body.dump();

        std::string last_error = "no attempt made";
        bool last_was_timeout = false;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                const auto delay = cfg_.backoff_base_ms * (1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
            httplib::Client client(base_);
            client.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            client.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            client.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));

            auto res = client.Post(path_, payload, "application/json");
            if (!res) {
                last_was_timeout = res.error() == httplib::Error::ConnectionTimeout ||
                                   res.error() == httplib::Error::Read;
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_was_timeout = false;
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw NonRetryableStatus(res->status,
                                         "llm endpoint returned status " +
                                             std::to_string(res->status));
            }
            return extract_completion(res->body);
        }
        if (last_was_timeout) {
            throw Timeout("llm request timed out after " + std::to_string(cfg_.max_retries + 1) +
                          " attempts");
        }
        throw TransportError("llm request failed after " + std::to_string(cfg_.max_retries + 1) +
                             " attempts: " + last_error);
    }

private:
    std::string extract_completion(const std::string& body) const {
        const auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) {
            throw NonRetryableStatus(200, "llm response body is not JSON");
        }
        const nlohmann::json::json_pointer ptr(cfg_.completion_path);
        if (!j.contains(ptr) || !j.at(ptr).is_string()) {
            throw NonRetryableStatus(200, "llm response lacks completion field at " +
                                              cfg_.completion_path);
        }
        return j.at(ptr).get<std::string>();
    }

    LlmClientConfig cfg_;
    std::string base_;
    std::string path_;
};

}  // namespace accel
