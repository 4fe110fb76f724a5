#include "triage/enrichment.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "triage/errors.hpp"

namespace triage {

namespace {

const char* speaker_display(Speaker s) {
  return s == Speaker::kCaller ? "Caller" : "Operator";
}

std::string line_tag(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string::npos) {
      parts.push_back(s.substr(pos));
      return parts;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

ParalinguisticAnnotation parse_block(const std::string& inner,
                                     const std::string& ctx) {
  const auto emo_pos = inner.find("; Emotion: ");
  if (emo_pos == std::string::npos)
    throw ParseError(ctx + "annotation block missing \"; Emotion: \"");
  const std::string left = inner.substr(0, emo_pos);
  const std::string right = inner.substr(emo_pos + 11);

  ParalinguisticAnnotation a;
  auto items = split_on(left, ", ");
  if (items.size() < 2)
    throw ParseError(ctx + "annotation needs at least one cue and an affect summary");
  a.affect_summary = items.back();
  items.pop_back();
  a.cues = std::move(items);
  a.emotion_ranking = split_on(right, " > ");

  for (const auto& cue : a.cues)
    if (cue.empty()) throw ParseError(ctx + "annotation has an empty cue");
  for (const auto& emo : a.emotion_ranking)
    if (emo.empty()) throw ParseError(ctx + "annotation has an empty emotion");
  return a;
}

}  // namespace

ParalinguisticAnnotation parse_annotation_block(const std::string& block) {
  if (block.size() < 2 || block.front() != '[' || block.back() != ']')
    throw ParseError("annotation block must be enclosed in '[' and ']'");
  return parse_block(block.substr(1, block.size() - 2), "");
}

std::string render_annotation(const ParalinguisticAnnotation& a) {
  std::string out = "[";
  for (const auto& cue : a.cues) out += cue + ", ";
  out += a.affect_summary + "; Emotion: ";
  for (std::size_t i = 0; i < a.emotion_ranking.size(); ++i) {
    if (i > 0) out += " > ";
    out += a.emotion_ranking[i];
  }
  out += "]";
  return out;
}

std::string render_enriched_segment(const Segment& seg,
                                    bool include_annotations) {
  std::string line = std::string(speaker_display(seg.speaker)) + ": " + seg.text;
  if (include_annotations && seg.annotation)
    line += " " + render_annotation(*seg.annotation);
  return line;
}

std::string render_enriched(const std::vector<Segment>& segments,
                            bool include_annotations) {
  std::string out;
  for (const Segment& seg : segments) {
    out += render_enriched_segment(seg, include_annotations);
    out.push_back('\n');
  }
  return out;
}

std::string render_enriched(const Call& call, bool include_annotations) {
  return render_enriched(call.segments, include_annotations);
}

std::vector<EnrichedLine> parse_enriched(const std::string& text) {
  std::vector<EnrichedLine> lines;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    EnrichedLine out;
    std::string rest;
    if (line.rfind("Caller: ", 0) == 0) {
      out.speaker = Speaker::kCaller;
      rest = line.substr(8);
    } else if (line.rfind("Operator: ", 0) == 0) {
      out.speaker = Speaker::kOperator;
      rest = line.substr(10);
    } else {
      throw ParseError(line_tag(line_no) +
                       "expected \"Caller: \" or \"Operator: \" prefix");
    }

    if (!rest.empty() && rest.back() == ']') {
      const auto open = rest.rfind(" [");
      if (open == std::string::npos)
        throw ParseError(line_tag(line_no) + "unbalanced ']'");
      out.text = rest.substr(0, open);
      out.annotation = parse_block(
          rest.substr(open + 2, rest.size() - open - 3), line_tag(line_no));
    } else {
      out.text = rest;
    }

    if (out.text.find_first_of("[]") != std::string::npos)
      throw ParseError(line_tag(line_no) + "unbalanced '[' in transcript text");
    if (out.text.empty())
      throw ParseError(line_tag(line_no) + "empty transcript text");
    lines.push_back(std::move(out));
  }
  return lines;
}

Call annotate_call(const Call& call, AnnotatorBackend& backend,
                   const AnnotateOptions& opts) {
  validate_call(call);
  const int batch_size = opts.batch_size > 0 ? opts.batch_size : 8;
  const std::size_t n = call.segments.size();
  const std::size_t n_batches = (n + batch_size - 1) / batch_size;

  std::vector<std::vector<std::optional<ParalinguisticAnnotation>>> results(
      n_batches);
  std::vector<std::string> failures(n_batches);
  std::atomic<std::size_t> next_batch{0};

  auto worker = [&]() {
    while (true) {
      const std::size_t b = next_batch.fetch_add(1);
      if (b >= n_batches) return;
      const std::size_t lo = b * batch_size;
      const std::size_t hi = std::min(n, lo + batch_size);
      const std::vector<Segment> batch(call.segments.begin() + lo,
                                       call.segments.begin() + hi);
      try {
        auto out = backend.annotate(batch);
        if (out.size() != batch.size())
          throw BackendError("backend returned " + std::to_string(out.size()) +
                             " annotations for " + std::to_string(batch.size()) +
                             " segments");
        results[b] = std::move(out);
      } catch (const std::exception& e) {
        failures[b] = "call \"" + call.call_id + "\", segments [" +
                      std::to_string(lo) + ", " + std::to_string(hi) +
                      "): " + e.what();
      }
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(
      n_batches, static_cast<std::size_t>(std::max(1, opts.max_in_flight)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (const auto& f : failures)
    if (!f.empty()) throw BackendError("annotator backend failed: " + f);

  Call out = call;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t lo = b * batch_size;
    for (std::size_t i = 0; i < results[b].size(); ++i) {
      auto& ann = results[b][i];
      if (!ann) continue;  // keep any existing annotation
      auto clean = sanitize_annotation(std::move(*ann));
      const auto issues = annotation_issues(clean);
      if (!issues.empty())
        throw BackendError("annotator backend produced an invalid annotation for call \"" +
                           call.call_id + "\", segment " + std::to_string(lo + i) +
                           ": " + issues.front());
      out.segments[lo + i].annotation = std::move(clean);
    }
  }
  return out;
}

}  // namespace triage
