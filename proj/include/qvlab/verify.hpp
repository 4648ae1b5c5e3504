#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace qvlab {

/// One measured quantity compared against its bound.
struct CheckResult {
    std::string criterion_id;  ///< e.g. "4b"
    std::string check;         ///< short description
    double measured = 0.0;
    double bound = 0.0;
    bool at_least = false;  ///< pass iff measured >= bound (else measured <= bound)
    bool pass = false;
};

struct SuiteResult {
    std::string suite;
    int criterion = 0;
    std::vector<CheckResult> checks;
    /// Named text artifacts (CSV); compared byte for byte by the determinism suite.
    std::map<std::string, std::string> artifacts;
    double seconds = 0.0;

    bool pass() const;
};

struct VerifyOptions {
    std::uint64_t seed = 20240607;
    unsigned threads = 0;  ///< 0: QVLAB_THREADS or hardware default
};

/// qv, martingale, parity, variance, ivsurface, covariance, wsm, autocorr,
/// clt, pv (in criterion order) followed by determinism.
const std::vector<std::string>& suite_names();

/// Runs one statistical or exact suite. ConfigError for unknown names.
SuiteResult run_suite(const std::string& name, const VerifyOptions& options);

/// Runs `selection` ("all", "determinism" or one suite name). The
/// determinism suite reruns the other suites with QVLAB_THREADS set to 1 and
/// to 8 and compares their artifacts byte for byte; under "all" the first of
/// those runs also supplies the reported results.
std::vector<SuiteResult> run_verification(const std::string& selection, const VerifyOptions& options);

/// `[{criterion_id, check, measured, bound, pass}, ...]`.
nlohmann::json verify_report_json(const std::vector<SuiteResult>& results);

/// One line per criterion: `criterion <n> <suite> PASS|FAIL <details>`.
std::string criterion_line(const SuiteResult& result);

}  // namespace qvlab
