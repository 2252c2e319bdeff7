#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mteval/error.hpp"

// Client for an external inference endpoint. Wire protocol is a minimal
// JSON-over-HTTP schema -- POST /v1/complete {model, prompt, max_tokens} ->
// {text} -- so adapters for specific completion APIs stay at the edge.
// Validation is injected, letting the same client serve the score task
// (parse a number) and the span task (parse a JSON array), and unparseable
// output falls back down an ordered endpoint chain.

namespace mteval {

struct RetryPolicy {
  int count = 2;                 // retries after the first attempt
  int backoff_ms = 100;          // doubled per retry
};

struct EndpointConfig {
  std::string base_url;          // e.g. "http://localhost:8080"
  std::string model_id;
  std::string auth_env;          // env var holding a bearer token; empty = none
  int timeout_sec = 30;
  int max_in_flight = 4;
  int max_tokens = 1024;
  RetryPolicy retry;

  void validate() const {
    if (base_url.empty()) throw Error("endpoint base_url is empty");
    if (model_id.empty()) throw Error("endpoint model_id is empty");
    if (timeout_sec <= 0) throw Error("endpoint timeout must be > 0");
    if (max_in_flight < 1) throw Error("endpoint max_in_flight must be >= 1");
  }
};

struct FallbackChain {
  std::vector<EndpointConfig> endpoints;

  void validate() const {
    if (endpoints.empty()) throw Error("fallback chain is empty");
    for (size_t i = 0; i < endpoints.size(); ++i) {
      endpoints[i].validate();
      for (size_t j = i + 1; j < endpoints.size(); ++j)
        if (endpoints[i].model_id == endpoints[j].model_id)
          throw Error("duplicate model id in fallback chain: " + endpoints[i].model_id);
    }
  }
};

inline EndpointConfig endpoint_from_json(const nlohmann::json& j) {
  EndpointConfig cfg;
  cfg.base_url = j.at("base_url").get<std::string>();
  cfg.model_id = j.at("model_id").get<std::string>();
  cfg.auth_env = j.value("auth_env", "");
  cfg.timeout_sec = j.value("timeout_sec", 30);
  cfg.max_in_flight = j.value("max_in_flight", 4);
  cfg.max_tokens = j.value("max_tokens", 1024);
  if (j.contains("retry")) {
    cfg.retry.count = j.at("retry").value("count", 2);
    cfg.retry.backoff_ms = j.at("retry").value("backoff_ms", 100);
  }
  return cfg;
}

inline FallbackChain chain_from_json(const nlohmann::json& j) {
  FallbackChain chain;
  for (const auto& e : j.at("endpoints")) chain.endpoints.push_back(endpoint_from_json(e));
  chain.validate();
  return chain;
}

/// Sends one completion request. Connection failures and 5xx responses are
/// retried per policy with doubling backoff; 4xx responses fail immediately.
inline std::string complete(const std::string& prompt, const EndpointConfig& cfg) {
  cfg.validate();
  httplib::Client client(cfg.base_url);
  client.set_connection_timeout(cfg.timeout_sec, 0);
  client.set_read_timeout(cfg.timeout_sec, 0);
  client.set_write_timeout(cfg.timeout_sec, 0);
  if (!cfg.auth_env.empty()) {
    const char* token = std::getenv(cfg.auth_env.c_str());
    if (!token) throw Error("auth environment variable not set: " + cfg.auth_env);
    client.set_bearer_token_auth(token);
  }
  const std::string body =
      nlohmann::json{{"model", cfg.model_id}, {"prompt", prompt}, {"max_tokens", cfg.max_tokens}}
          .dump();

  httplib::Error last_err = httplib::Error::Success;
  int last_status = 0;
  for (int attempt = 0; attempt <= cfg.retry.count; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg.retry.backoff_ms << (attempt - 1)));
    auto res = client.Post("/v1/complete", body, "application/json");
    if (!res) {
      last_err = res.error();
      continue;
    }
    if (res->status >= 500) {
      last_status = res->status;
      continue;
    }
    if (res->status != 200)
      throw HttpError("endpoint " + cfg.base_url + " returned status " +
                      std::to_string(res->status));
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw HttpError("malformed completion response from " + cfg.base_url + ": " + e.what());
    }
  }
  if (last_status >= 500)
    throw HttpError("endpoint " + cfg.base_url + " kept returning status " +
                    std::to_string(last_status) + " after " + std::to_string(cfg.retry.count) +
                    " retries");
  if (last_err == httplib::Error::ConnectionTimeout || last_err == httplib::Error::Read ||
      last_err == httplib::Error::Write)
    throw Timeout("endpoint " + cfg.base_url + " timed out");
  throw ExhaustedRetries("endpoint " + cfg.base_url + " unreachable (" +
                         httplib::to_string(last_err) + ")");
}

using Validator = std::function<bool(const std::string&)>;

struct FallbackResult {
  std::string response;
  std::string model_id;
  size_t endpoint_index = 0;
};

struct FallbackAttempt {
  std::string model_id;
  std::string response;  // empty on transport failure
  std::string error;
};

/// Tries endpoints in order; the first response passing the validator wins.
/// A later endpoint is consulted only after the earlier one definitively
/// failed (transport error or rejected output). With resample_first, a
/// failing endpoint gets one same-model retry before the chain moves on.
inline FallbackResult complete_with_fallback(const std::string& prompt, const FallbackChain& chain,
                                             const Validator& validator,
                                             bool resample_first = false,
                                             std::vector<FallbackAttempt>* attempts = nullptr) {
  chain.validate();
  std::vector<FallbackAttempt> log;
  for (size_t i = 0; i < chain.endpoints.size(); ++i) {
    const auto& cfg = chain.endpoints[i];
    const int tries = resample_first ? 2 : 1;
    for (int t = 0; t < tries; ++t) {
      FallbackAttempt attempt{cfg.model_id, "", ""};
      try {
        attempt.response = complete(prompt, cfg);
        if (validator(attempt.response)) {
          if (attempts) *attempts = std::move(log);
          return FallbackResult{attempt.response, cfg.model_id, i};
        }
        attempt.error = "validator rejected response";
      } catch (const TransportError& e) {
        attempt.error = e.what();
      }
      log.push_back(std::move(attempt));
    }
  }
  std::string detail = "all endpoints failed";
  for (const auto& a : log) detail += "; " + a.model_id + ": " + a.error;
  if (attempts) *attempts = std::move(log);
  throw AllEndpointsFailed(detail);
}

struct BatchItem {
  bool ok = false;
  std::string response;
  std::string model_id;
  std::string error;
};

/// Completes a batch of prompts with at most `max_in_flight` concurrent
/// requests. Output order matches input order regardless of completion
/// order; failures are captured per item rather than aborting the batch.
inline std::vector<BatchItem> run_batch(const std::vector<std::string>& prompts,
                                        const FallbackChain& chain, const Validator& validator,
                                        int max_in_flight, bool resample_first = false) {
  chain.validate();
  if (max_in_flight < 1) throw Error("max_in_flight must be >= 1");
  std::vector<BatchItem> results(prompts.size());
  std::atomic<size_t> next{0};
  const auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      try {
        auto r = complete_with_fallback(prompts[i], chain, validator, resample_first);
        results[i] = BatchItem{true, std::move(r.response), std::move(r.model_id), ""};
      } catch (const Error& e) {
        results[i] = BatchItem{false, "", "", e.what()};
      }
    }
  };
  const size_t n_workers = std::min<size_t>(static_cast<size_t>(max_in_flight), prompts.size());
  std::vector<std::thread> workers;
  for (size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  return results;
}

}  // namespace mteval
