#include "triage/corpus.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "triage/errors.hpp"

namespace triage {

using nlohmann::json;
using nlohmann::ordered_json;

const char* speaker_name(Speaker s) {
  return s == Speaker::kCaller ? "caller" : "operator";
}

Speaker speaker_from_name(const std::string& name) {
  if (name == "caller") return Speaker::kCaller;
  if (name == "operator") return Speaker::kOperator;
  throw ParseError("unknown speaker \"" + name + "\"");
}

namespace {

bool is_blank(const std::string& s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

const char* gender_name(Gender g) { return g == Gender::kMale ? "M" : "F"; }

Gender gender_from_name(const std::string& name) {
  if (name == "M") return Gender::kMale;
  if (name == "F") return Gender::kFemale;
  throw ParseError("unknown gender \"" + name + "\" (expected \"M\" or \"F\")");
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ParseError(where + ": unknown field \"" + it.key() + "\"");
  }
}

ParalinguisticAnnotation annotation_from_json(const json& j,
                                              const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": annotation must be an object");
  check_keys(j, {"cues", "affect_summary", "emotion_ranking"}, where);
  ParalinguisticAnnotation a;
  try {
    a.cues = j.at("cues").get<std::vector<std::string>>();
    a.affect_summary = j.at("affect_summary").get<std::string>();
    a.emotion_ranking = j.at("emotion_ranking").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad annotation: " + e.what());
  }
  return a;
}

ordered_json annotation_to_json(const ParalinguisticAnnotation& a) {
  return ordered_json{{"cues", a.cues},
                      {"affect_summary", a.affect_summary},
                      {"emotion_ranking", a.emotion_ranking}};
}

Segment segment_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": segment must be an object");
  check_keys(j, {"speaker", "start_s", "end_s", "text", "annotation"}, where);
  Segment s;
  try {
    s.speaker = speaker_from_name(j.at("speaker").get<std::string>());
    s.start_s = j.at("start_s").get<double>();
    s.end_s = j.at("end_s").get<double>();
    s.text = j.at("text").get<std::string>();
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (j.contains("annotation") && !j.at("annotation").is_null())
    s.annotation = annotation_from_json(j.at("annotation"), where);
  return s;
}

ordered_json segment_to_json(const Segment& s) {
  ordered_json j{{"speaker", speaker_name(s.speaker)},
                 {"start_s", s.start_s},
                 {"end_s", s.end_s},
                 {"text", s.text}};
  j["annotation"] = s.annotation ? annotation_to_json(*s.annotation)
                                 : ordered_json(nullptr);
  return j;
}

}  // namespace

std::vector<std::string> call_issues(const Call& call) {
  std::vector<std::string> issues;
  if (call.call_id.empty()) issues.push_back("call_id is empty");
  if (!label_valid(call.label))
    issues.push_back("label " + std::to_string(call.label) +
                     " not in {0, 1, 2}");
  if (call.age && *call.age < 0) issues.push_back("age is negative");
  if (call.segments.empty()) {
    issues.push_back("call has no segments");
    return issues;
  }
  for (std::size_t i = 0; i < call.segments.size(); ++i) {
    const Segment& s = call.segments[i];
    const std::string where = "segment " + std::to_string(i);
    if (s.start_s < 0.0) issues.push_back(where + ": start_s < 0");
    if (!(s.end_s > s.start_s)) issues.push_back(where + ": end_s <= start_s");
    if (is_blank(s.text)) issues.push_back(where + ": text is blank");
    if (i + 1 < call.segments.size() && s.end_s > call.segments[i + 1].start_s)
      issues.push_back(where + ": overlaps segment " + std::to_string(i + 1));
    if (s.annotation) {
      for (const auto& msg : annotation_issues(*s.annotation))
        issues.push_back(where + ": " + msg);
    }
  }
  if (!(call.duration_s() > 0.0)) issues.push_back("call duration is not positive");
  return issues;
}

void validate_call(const Call& call) {
  const auto issues = call_issues(call);
  if (issues.empty()) return;
  std::string msg = "call \"" + call.call_id + "\" invalid:";
  for (const auto& i : issues) msg += "\n  - " + i;
  throw ValidationError(msg);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.empty()) throw ValidationError("corpus is empty");
  CorpusStats st;
  st.n_calls = corpus.size();
  double sum = 0.0, sum_sq = 0.0;
  for (const Call& c : corpus) {
    st.label_histogram[c.label] += 1;
    const double minutes = c.duration_s() / 60.0;
    sum += minutes;
    sum_sq += minutes * minutes;
    if (c.age) st.age_histogram[*c.age] += 1;
    if (c.gender) st.gender_counts[gender_name(*c.gender)] += 1;
  }
  const double n = static_cast<double>(st.n_calls);
  st.mean_duration_min = sum / n;
  const double var = sum_sq / n - st.mean_duration_min * st.mean_duration_min;
  st.std_duration_min = std::sqrt(var > 0.0 ? var : 0.0);
  return st;
}

Call parse_call_line(const std::string& line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError(where + ": record must be an object");
  check_keys(j, {"call_id", "label", "age", "gender", "segments"}, where);
  Call call;
  try {
    call.call_id = j.at("call_id").get<std::string>();
    call.label = j.at("label").get<int>();
    if (j.contains("age") && !j.at("age").is_null())
      call.age = j.at("age").get<int>();
    if (j.contains("gender") && !j.at("gender").is_null())
      call.gender = gender_from_name(j.at("gender").get<std::string>());
    const json& segs = j.at("segments");
    if (!segs.is_array()) throw ParseError(where + ": \"segments\" must be an array");
    for (std::size_t i = 0; i < segs.size(); ++i)
      call.segments.push_back(segment_from_json(
          segs[i], where + ", segment " + std::to_string(i)));
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }

  const auto issues = call_issues(call);
  if (!issues.empty()) {
    std::string msg = where + ": call \"" + call.call_id + "\" invalid:";
    for (const auto& i : issues) msg += "\n  - " + i;
    throw ValidationError(msg);
  }
  return call;
}

std::string serialize_call(const Call& call) {
  ordered_json j;
  j["call_id"] = call.call_id;
  j["label"] = call.label;
  j["age"] = call.age ? ordered_json(*call.age) : ordered_json(nullptr);
  j["gender"] =
      call.gender ? ordered_json(gender_name(*call.gender)) : ordered_json(nullptr);
  ordered_json segs = ordered_json::array();
  for (const Segment& s : call.segments) segs.push_back(segment_to_json(s));
  j["segments"] = std::move(segs);
  return j.dump();
}

namespace {

Corpus parse_corpus_stream(std::istream& in) {
  Corpus corpus;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Call call = parse_call_line(line, line_no);
    if (!seen_ids.insert(call.call_id).second)
      throw ParseError("line " + std::to_string(line_no) +
                       ": duplicate call_id \"" + call.call_id + "\"");
    corpus.push_back(std::move(call));
  }
  return corpus;
}

}  // namespace

Corpus parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file \"" + path + "\"");
  return parse_corpus_stream(in);
}

Corpus parse_corpus_string(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus_stream(in);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Call& c : corpus) {
    out += serialize_call(c);
    out.push_back('\n');
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TriageError("cannot write corpus file \"" + path + "\"");
  out << serialize_corpus(corpus);
}

}  // namespace triage
