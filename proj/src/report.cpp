#include "qlab/report.hpp"

#include <cstdio>

namespace qlab {

namespace {

const char* status_name(ReportRecord::Status s) {
  switch (s) {
    case ReportRecord::Status::pass: return "pass";
    case ReportRecord::Status::fail: return "fail";
    case ReportRecord::Status::info: return "info";
  }
  return "info";
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ReportRecord ReportRecord::info(std::string name, double value, double imag) {
  ReportRecord r;
  r.name = std::move(name);
  r.value = value;
  r.value_imag = imag;
  r.status = Status::info;
  return r;
}

ReportRecord ReportRecord::checked(std::string name, double value, bool ok,
                                   double tolerance) {
  ReportRecord r;
  r.name = std::move(name);
  r.value = value;
  r.tolerance = tolerance;
  r.status = ok ? Status::pass : Status::fail;
  return r;
}

bool RunReport::all_passed() const { return failure_count() == 0; }

std::size_t RunReport::failure_count() const {
  std::size_t n = 0;
  for (const auto& r : records)
    if (r.status == ReportRecord::Status::fail) ++n;
  return n;
}

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["config"] = config_echo;
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json e;
    e["name"] = r.name;
    e["value"] = r.value;
    if (r.value_imag != 0.0) e["value_imag"] = r.value_imag;
    if (r.tolerance) e["tolerance"] = *r.tolerance;
    e["status"] = status_name(r.status);
    recs.push_back(std::move(e));
  }
  j["records"] = std::move(recs);
  return j.dump(2) + "\n";
}

std::string RunReport::to_csv() const {
  std::string out = "name,value_real,value_imag,tolerance,status\n";
  for (const auto& r : records) {
    out += r.name;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += format_double(r.value_imag);
    out += ',';
    out += r.tolerance ? format_double(*r.tolerance) : "";
    out += ',';
    out += status_name(r.status);
    out += '\n';
  }
  return out;
}

}  // namespace qlab
