#include "wns/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace wns {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : n_cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

void CsvWriter::add_row(std::vector<std::string> cells) {
    if (cells.size() != n_cols_) throw std::invalid_argument("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) body_ += ',';
        body_ += cells[i];
    }
    body_ += '\n';
}

void CsvWriter::add_row_values(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    add_row(std::move(cells));
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, body_); }

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << content;
}

CheckResult check_relative(const std::string& name, const EstimateCI& est, double target,
                           double rel_tol) {
    CheckResult c;
    c.name = name;
    c.value = est.mean;
    c.ci_lo = est.ci_lo;
    c.ci_hi = est.ci_hi;
    c.target = target;
    c.tolerance = rel_tol;
    c.kind = "relative";
    c.pass = std::abs(est.mean - target) <= rel_tol * std::abs(target);
    return c;
}

CheckResult check_ci_covers(const std::string& name, const EstimateCI& est, double target) {
    CheckResult c;
    c.name = name;
    c.value = est.mean;
    c.ci_lo = est.ci_lo;
    c.ci_hi = est.ci_hi;
    c.target = target;
    c.kind = "ci-covers";
    c.pass = est.contains(target);
    return c;
}

CheckResult check_p_above(const std::string& name, double p, double threshold) {
    CheckResult c;
    c.name = name;
    c.value = p;
    c.target = threshold;
    c.tolerance = threshold;
    c.kind = "p-above";
    c.pass = p > threshold;
    return c;
}

CheckResult check_true(const std::string& name, bool ok) {
    CheckResult c;
    c.name = name;
    c.value = ok ? 1.0 : 0.0;
    c.target = 1.0;
    c.kind = "exact";
    c.pass = ok;
    return c;
}

CheckResult info_value(const std::string& name, double v) {
    CheckResult c;
    c.name = name;
    c.value = v;
    c.kind = "info";
    c.pass = true;
    return c;
}

bool RunSummary::pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

nlohmann::json RunSummary::to_json() const {
    nlohmann::json j;
    j["schema"] = "wns-report-1";
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["pass"] = pass();
    j["outputs"] = outputs;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json e;
        e["name"] = c.name;
        e["value"] = c.value;
        e["ci_lo"] = c.ci_lo;
        e["ci_hi"] = c.ci_hi;
        e["target"] = c.target;
        e["tolerance"] = c.tolerance;
        e["kind"] = c.kind;
        e["pass"] = c.pass;
        arr.push_back(std::move(e));
    }
    j["results"] = std::move(arr);
    return j;
}

void RunSummary::write(const std::string& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
}

}  // namespace wns
