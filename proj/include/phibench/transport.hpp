// Copyright 2026 The phibench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include <httplib.h>

#include "phibench/error.hpp"

namespace phibench {

/// Where a remote backend lives and how hard to try reaching it.
struct BackendEndpoint {
    std::string base_url;
    double timeout_seconds = 60.0;
    int max_retries = 2;
    double retry_backoff_seconds = 0.25;
    // Name of the environment variable holding a bearer token; empty for none.
    std::string auth_token_env;

    void validate() const {
        if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
        if (!(timeout_seconds > 0.0)) throw ConfigError("endpoint timeout must be positive");
        if (max_retries < 0) throw ConfigError("endpoint max_retries must be non-negative");
        if (retry_backoff_seconds < 0.0) throw ConfigError("endpoint backoff must be non-negative");
    }
};

struct HttpReply {
    int status = 0;  // 0: no response (connection failure or timeout)
    std::string body;
};

/// Moves one JSON request to a backend and returns its reply.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpReply post(const std::string& path, const std::string& body) = 0;
};

class HttpTransport final : public Transport {
public:
    explicit HttpTransport(BackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {
        endpoint_.validate();
        if (!endpoint_.auth_token_env.empty()) {
            if (const char* token = std::getenv(endpoint_.auth_token_env.c_str())) token_ = token;
        }
    }

    HttpReply post(const std::string& path, const std::string& body) override {
        httplib::Client client(endpoint_.base_url);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::duration<double>(endpoint_.timeout_seconds));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) return {0, httplib::to_string(res.error())};
        return {res->status, res->body};
    }

    const BackendEndpoint& endpoint() const { return endpoint_; }

private:
    BackendEndpoint endpoint_;
    std::string token_;
};

/// Calls a handler in-process; used to run remote clients against a stub
/// without opening a socket.
class LoopbackTransport final : public Transport {
public:
    using Handler = std::function<HttpReply(const std::string& path, const std::string& body)>;
    explicit LoopbackTransport(Handler handler) : handler_(std::move(handler)) {}
    HttpReply post(const std::string& path, const std::string& body) override { return handler_(path, body); }

private:
    Handler handler_;
};

}  // namespace phibench
