#include "recsolve/report.hpp"

#include <sstream>

#include "json.hpp"

namespace recsolve {

using nlohmann::json;

namespace {

const Classification kAllClasses[] = {Classification::Exact, Classification::Theta, Classification::ExpTheta,
                                      Classification::NonTrivial, Classification::None};

std::string verification_status(const BenchmarkResult& r) {
  return r.verification ? verdict_name(r.verification->verdict) : "skipped";
}

std::map<std::string, size_t> zero_classes() {
  std::map<std::string, size_t> m;
  for (auto c : kAllClasses) m[classification_name(c)] = 0;
  return m;
}

json verification_json(const BenchmarkResult& r) {
  json v;
  v["status"] = verification_status(r);
  if (!r.verification) return v;
  const VerificationResult& vr = *r.verification;
  v["solver_calls"] = vr.solver_calls;
  switch (vr.verdict) {
    case Verdict::Disproved: {
      json cx = json::object();
      for (const auto& [k, val] : vr.counterexample) cx[k] = val.get_str();
      v["counterexample"] = cx;
      v["confirmed"] = vr.confirmed;
      break;
    }
    case Verdict::Unknown: v["reason"] = vr.reason; break;
    case Verdict::Unsupported:
      v["unsupported"] = vr.unsupported;
      v["offending"] = vr.offending;
      break;
    case Verdict::Proved: break;
  }
  return v;
}

json result_json(const BenchmarkResult& r) {
  json j;
  j["type"] = "benchmark";
  j["name"] = r.name;
  j["category"] = r.category;
  j["reconstructed"] = r.reconstructed;
  j["method"] = r.method;
  j["domsplit"] = r.domsplit;
  j["seed"] = r.seed;
  j["candidate"] = r.candidate ? json(print_inline(*r.candidate)) : json(nullptr);
  j["expect"] = r.expect ? json(print_inline(*r.expect)) : json(nullptr);
  j["score"] = r.score;
  j["verification"] = verification_json(r);
  j["classification"] = classification_name(r.classification);
  j["errors"] = r.errors;
  j["internal_error"] = r.internal_error;
  j["timings"] = {{"sample", r.times.sample}, {"fit", r.times.fit}, {"verify", r.times.verify}};
  return j;
}

void strip(json& j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto& [k, v] : j.items()) strip(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip(v);
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Summary summarize(const std::vector<BenchmarkResult>& results) {
  Summary s;
  s.classes = zero_classes();
  for (const char* st : {"proved", "disproved", "unknown", "unsupported", "skipped"}) s.verification[st] = 0;
  for (const auto& r : results) {
    ++s.total;
    const std::string c = classification_name(r.classification);
    ++s.classes[c];
    auto& cat = s.by_category[r.category.empty() ? "uncategorized" : r.category];
    if (cat.empty()) cat = zero_classes();
    ++cat[c];
    ++s.verification[verification_status(r)];
    if (r.internal_error) ++s.internal_errors;
  }
  return s;
}

std::string to_jsonl(const std::vector<BenchmarkResult>& results, const ReportMeta& meta) {
  std::ostringstream out;
  json header = {{"type", "header"},     {"format-version", kReportFormatVersion},
                 {"command", meta.command}, {"method", meta.method},
                 {"domsplit", meta.domsplit}, {"seed", meta.seed},
                 {"repeat", meta.repeat},   {"verify", meta.verify}};
  out << header.dump() << '\n';
  for (const auto& r : results) out << result_json(r).dump() << '\n';
  Summary s = summarize(results);
  json summary = {{"type", "summary"},
                  {"total", s.total},
                  {"classifications", s.classes},
                  {"by_category", s.by_category},
                  {"verification", s.verification},
                  {"internal_errors", s.internal_errors}};
  out << summary.dump() << '\n';
  return out.str();
}

std::string to_csv(const std::vector<BenchmarkResult>& results) {
  std::ostringstream out;
  out << "# format-version: " << kReportFormatVersion << '\n';
  out << "name,category,method,domsplit,seed,candidate,score,verification,classification,"
         "sample_s,fit_s,verify_s,internal_error\n";
  for (const auto& r : results) {
    out << csv_field(r.name) << ',' << csv_field(r.category) << ',' << r.method << ',' << (r.domsplit ? 1 : 0)
        << ',' << r.seed << ',' << csv_field(r.candidate ? print_inline(*r.candidate) : "") << ',' << r.score
        << ',' << verification_status(r) << ',' << classification_name(r.classification) << ','
        << r.times.sample << ',' << r.times.fit << ',' << r.times.verify << ',' << (r.internal_error ? 1 : 0)
        << '\n';
  }
  return out.str();
}

std::string strip_timings(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::ostringstream out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    json j = json::parse(line);
    strip(j);
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace recsolve
