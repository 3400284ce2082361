#pragma once

// CSV and JSON-summary output. CSV: header row, '.' decimal separator, LF
// endings. Summaries follow the versioned "wns-report-1" schema and echo the
// full effective config so a run can be reproduced from its own output.

#include <json.hpp>

#include <string>
#include <vector>

#include "wns/stats.hpp"

namespace wns {

std::string format_double(double v);

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(std::vector<std::string> cells);
    void add_row_values(const std::vector<double>& values);
    const std::string& body() const { return body_; }
    void write(const std::string& path) const;

  private:
    std::size_t n_cols_;
    std::string body_;
};

struct CheckResult {
    std::string name;
    double value = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double target = 0.0;
    double tolerance = 0.0;  // interpretation recorded in `kind`
    std::string kind;        // "relative", "absolute", "p-above", "exact", "info"
    bool pass = true;
};

CheckResult check_relative(const std::string& name, const EstimateCI& est, double target,
                           double rel_tol);
CheckResult check_ci_covers(const std::string& name, const EstimateCI& est, double target);
CheckResult check_p_above(const std::string& name, double p, double threshold);
CheckResult check_true(const std::string& name, bool ok);
CheckResult info_value(const std::string& name, double v);

struct RunSummary {
    std::string subcommand;
    nlohmann::json config;
    std::vector<CheckResult> checks;
    std::vector<std::string> outputs;

    bool pass() const;
    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace wns
