// Declarative experiment runner: parses flat key=value spec files with
// [section] blocks, runs eps sweeps binding shapes/solvers/probes to CSV
// reports, and evaluates machine-readable pass/fail checks.
#pragma once
#include "pf/shapes.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pf {

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    RecoverySweep,
    SaddleBlowdown,
    CuspLimit,
    TangentProbe,
    EnergyCheck,
};

struct ExperimentSpec {
    std::string name;
    ExperimentKind kind = ExperimentKind::RecoverySweep;
    std::vector<double> eps_list; // strictly decreasing
    int cells_per_eps = 8;
    long max_nodes = 8'000'000;
    Rect domain;
    BoundaryKind bc = BoundaryKind::Neumann;
    std::string out_dir; // default runs/<name>

    // kind-specific key/value payload by section
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const;
    std::string get(const std::string& sec, const std::string& key) const;
    std::string get_or(const std::string& sec, const std::string& key,
                       const std::string& dflt) const;
    double num(const std::string& sec, const std::string& key) const;
    double num_or(const std::string& sec, const std::string& key, double dflt) const;
    std::vector<double> list(const std::string& sec, const std::string& key) const;
};

ExperimentSpec parse_spec_text(const std::string& text, const std::string& origin = "<text>");
ExperimentSpec parse_spec_file(const std::string& path);

struct CheckLine {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string line() const; // "CHECK <name> value=... threshold=... PASS|FAIL"
};

struct RunResult {
    std::vector<CheckLine> checks;
    std::vector<std::string> files;
    bool ok() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

RunResult run_experiment(const ExperimentSpec& spec);

// Reads sweep CSV output from a run directory and emits gnuplot-style
// two-column panels plus a summary with observed convergence orders.
struct ReportResult {
    std::vector<std::string> files;
    std::string summary;
};
ReportResult report_run(const std::string& dir);

// Built-in presets
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name); // throws SpecError if unknown

} // namespace pf
