#include "triage/backends.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "triage/errors.hpp"
#include "triage/resources.hpp"

namespace triage {

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig cfg;
  if (const char* url = std::getenv("TRIAGE_BACKEND_URL")) cfg.base_url = url;
  if (const char* tok = std::getenv("TRIAGE_BACKEND_TOKEN"))
    cfg.auth_token = tok;
  if (cfg.base_url.empty())
    throw ConfigError("TRIAGE_BACKEND_URL is not set");
  return cfg;
}

struct HttpChatBackend::Impl {
  HttpBackendConfig cfg;
  httplib::Client client;

  explicit Impl(HttpBackendConfig c)
      : cfg(std::move(c)), client(cfg.base_url) {
    client.set_connection_timeout(cfg.timeout_s, 0);
    client.set_read_timeout(cfg.timeout_s, 0);
    client.set_write_timeout(cfg.timeout_s, 0);
    if (!cfg.auth_token.empty()) client.set_bearer_token_auth(cfg.auth_token);
  }
};

HttpChatBackend::HttpChatBackend(HttpBackendConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {
  if (impl_->cfg.base_url.empty())
    throw ConfigError("chat backend needs a base URL");
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::complete(const std::string& prompt) {
  nlohmann::json body = {
      {"model", impl_->cfg.model},
      {"messages",
       nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", impl_->cfg.temperature},
  };
  const std::string payload = body.dump();

  std::string last_error;
  const int tries = impl_->cfg.max_retries + 1;
  for (int attempt = 0; attempt < tries; ++attempt) {
    auto res = impl_->client.Post("/v1/chat/completions", payload,
                                  "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      // client errors are not retried; the request will not get better
      if (res->status >= 400 && res->status < 500)
        throw BackendError("chat backend rejected the request: " + last_error);
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat backend reply: ") +
                         e.what());
    }
  }
  throw BackendError("chat backend unreachable after " +
                     std::to_string(tries) + " attempts (" + last_error + ")");
}

namespace {

std::string format_segment_payload(const Segment& s, std::size_t index,
                                   AnnotatorPayload payload,
                                   const std::string& call_id) {
  std::ostringstream line;
  line << (index + 1) << ". ";
  if (payload == AnnotatorPayload::kTranscript) {
    line << speaker_name(s.speaker) << ": " << s.text;
  } else {
    line << "audio " << (call_id.empty() ? "call" : call_id) << " ["
         << s.start_s << "s-" << s.end_s << "s] speaker "
         << speaker_name(s.speaker);
  }
  return line.str();
}

}  // namespace

HttpAnnotator::HttpAnnotator(HttpBackendConfig cfg, AnnotatorPayload payload,
                             std::string call_id)
    : chat_(std::move(cfg)), payload_(payload), call_id_(std::move(call_id)) {}

HttpAnnotator::~HttpAnnotator() = default;

std::vector<std::optional<ParalinguisticAnnotation>> HttpAnnotator::annotate(
    const std::vector<Segment>& segments) {
  if (segments.empty()) return {};
  std::string listing;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    listing += format_segment_payload(segments[i], i, payload_, call_id_);
    listing += '\n';
  }
  const std::string prompt =
      expand_template(annotator_prompt_template(), {{"segments", listing}});
  return parse_annotator_reply(chat_.complete(prompt), segments.size());
}

std::vector<std::optional<ParalinguisticAnnotation>> parse_annotator_reply(
    const std::string& reply, std::size_t n_segments) {
  std::vector<std::optional<ParalinguisticAnnotation>> out(n_segments);
  std::istringstream in(reply);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t i = 0;
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t digits = 0;
    while (i + digits < line.size() &&
           std::isdigit(static_cast<unsigned char>(line[i + digits])))
      ++digits;
    if (digits == 0 || digits > 6 || i + digits >= line.size() ||
        line[i + digits] != '.')
      continue;  // not an index line; ignore
    const int index = std::stoi(line.substr(i, digits));
    if (index < 1 || static_cast<std::size_t>(index) > n_segments) continue;
    std::size_t body = i + digits + 1;
    while (body < line.size() && line[body] == ' ') ++body;
    const std::string rest = line.substr(body);
    if (rest == "none" || rest.empty()) continue;
    if (rest.front() != '[' || rest.back() != ']') continue;
    try {
      out[static_cast<std::size_t>(index - 1)] = parse_annotation_block(rest);
    } catch (const ParseError&) {
      // malformed block: treated as no annotation for that segment
    }
  }
  return out;
}

}  // namespace triage
