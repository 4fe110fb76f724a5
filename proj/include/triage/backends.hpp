#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "triage/enrichment.hpp"

namespace triage {

// Single-turn text completion over an instruction prompt.
class TextGenBackend {
 public:
  virtual ~TextGenBackend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpBackendConfig {
  std::string base_url;    // e.g. "http://127.0.0.1:8731"
  std::string model;       // forwarded verbatim in the request body
  std::string auth_token;  // optional; sent as a bearer token
  double temperature = 0.0;
  int timeout_s = 60;
  int max_retries = 2;  // transport retries per request

  // Reads TRIAGE_BACKEND_URL / TRIAGE_BACKEND_TOKEN; tokens never come from
  // config files.
  static HttpBackendConfig from_env();
};

// Chat-completions-style JSON client:
//   POST <base_url>/v1/chat/completions
//   {"model": ..., "messages": [{"role": "user", "content": ...}],
//    "temperature": ...}
// The reply's choices[0].message.content is returned verbatim.
class HttpChatBackend : public TextGenBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig cfg);
  ~HttpChatBackend() override;

  std::string complete(const std::string& prompt) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// What the annotator sends per segment: the transcript text, or a reference
// to the audio span (for speech backends that fetch audio themselves).
enum class AnnotatorPayload { kTranscript, kAudioRef };

// Speech-model annotator over the chat endpoint. The prompt instructs the
// model to answer one line per segment:
//   <index>. none
//   <index>. [cue1, cue2, <affect summary>; Emotion: e1 > e2]
// Indices are 1-based; lines that match no index pattern are ignored;
// segments with no line stay unannotated.
class HttpAnnotator : public AnnotatorBackend {
 public:
  explicit HttpAnnotator(HttpBackendConfig cfg,
                         AnnotatorPayload payload = AnnotatorPayload::kTranscript,
                         std::string call_id = {});
  ~HttpAnnotator() override;

  std::vector<std::optional<ParalinguisticAnnotation>> annotate(
      const std::vector<Segment>& segments) override;

 private:
  HttpChatBackend chat_;
  AnnotatorPayload payload_;
  std::string call_id_;
};

// Parse an annotator reply into index-aligned optionals for n segments.
std::vector<std::optional<ParalinguisticAnnotation>> parse_annotator_reply(
    const std::string& reply, std::size_t n_segments);

}  // namespace triage
