// pf: experiment runner for the 2D phase-field energies.
//
//   pf run <spec|preset>      run an experiment, print CHECK lines
//   pf report <dir>           turn a run directory into plot panels + summary
//   pf field info <file>      summarize a PF2D snapshot
//   pf field convert <a> <b>  convert PF2D <-> x,y,value CSV
//   pf preset list|show       built-in experiment presets
//
// exit codes: 0 pass, 1 acceptance failure, 2 usage/parse error, 3 numerical abort
#include "pf/experiment.hpp"
#include "pf/field_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

pf::ExperimentSpec resolve_spec(const std::string& arg) {
    if (std::filesystem::exists(arg)) return pf::parse_spec_file(arg);
    std::string name = arg;
    if (name.rfind("presets/", 0) == 0) name = name.substr(8);
    if (name.size() > 5 && name.substr(name.size() - 5) == ".spec")
        name = name.substr(0, name.size() - 5);
    auto names = pf::preset_names();
    if (std::find(names.begin(), names.end(), name) != names.end())
        return pf::parse_spec_text(pf::preset_text(name), "preset:" + name);
    throw pf::SpecError("no spec file or preset named '" + arg + "'");
}

int cmd_run(const std::string& spec_arg, const std::string& out_override) {
    pf::ExperimentSpec spec = resolve_spec(spec_arg);
    if (!out_override.empty()) spec.out_dir = out_override;
    pf::RunResult rr = pf::run_experiment(spec);
    for (const auto& c : rr.checks) std::cout << c.line() << "\n";
    for (const auto& f : rr.files) std::cout << "wrote " << f << "\n";
    return rr.ok() ? 0 : 1;
}

int cmd_report(const std::string& dir) {
    pf::ReportResult rep = pf::report_run(dir);
    std::cout << rep.summary;
    for (const auto& f : rep.files) std::cout << "wrote " << f << "\n";
    return 0;
}

int cmd_field_info(const std::string& path) {
    std::string comment;
    pf::ScalarField2D u = pf::read_field(path, &comment);
    const pf::Grid2D& g = u.grid;
    double lo = u.v[0], hi = u.v[0], mean = 0.0;
    for (double v : u.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        mean += v;
    }
    mean /= u.v.size();
    std::printf("%s: %dx%d h=(%g,%g) origin=(%g,%g) bc=%s\n", path.c_str(), g.nx, g.ny, g.hx,
                g.hy, g.ox, g.oy, pf::to_string(g.bc).c_str());
    if (!comment.empty()) std::printf("comment: %s\n", comment.c_str());
    std::printf("min=%.17g max=%.17g mean=%.17g\n", lo, hi, mean);
    return 0;
}

int cmd_field_convert(const std::string& src, const std::string& dst) {
    auto ends_with = [](const std::string& s, const std::string& suf) {
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(src, ".pf2d") && ends_with(dst, ".csv")) {
        pf::ScalarField2D u = pf::read_field(src);
        std::ofstream out(dst);
        if (!out) throw std::runtime_error("cannot write '" + dst + "'");
        out << "x,y,value\n";
        char buf[128];
        for (int j = 0; j < u.grid.ny; ++j)
            for (int i = 0; i < u.grid.nx; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", u.grid.x(i), u.grid.y(j),
                              u.at(i, j));
                out << buf;
            }
        std::cout << "wrote " << dst << "\n";
        return 0;
    }
    throw std::runtime_error("convert supports .pf2d -> .csv");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D phase-field energies: experiments, fields, presets"};
    app.require_subcommand(1);

    std::string spec_arg, out_override, report_dir, field_path, conv_src, conv_dst,
        preset_name;

    auto* run = app.add_subcommand("run", "run an experiment spec or preset");
    run->add_option("spec", spec_arg, "spec file path or preset name")->required();
    run->add_option("--out", out_override, "output directory override");

    auto* report = app.add_subcommand("report", "emit plot panels for a run directory");
    report->add_option("dir", report_dir, "run output directory")->required();

    auto* field = app.add_subcommand("field", "PF2D snapshot utilities");
    field->require_subcommand(1);
    auto* finfo = field->add_subcommand("info", "print header and value range");
    finfo->add_option("file", field_path)->required();
    auto* fconv = field->add_subcommand("convert", "convert between formats");
    fconv->add_option("src", conv_src)->required();
    fconv->add_option("dst", conv_dst)->required();

    auto* preset = app.add_subcommand("preset", "built-in presets");
    preset->require_subcommand(1);
    preset->add_subcommand("list", "list preset names");
    auto* pshow = preset->add_subcommand("show", "print a preset spec");
    pshow->add_option("name", preset_name)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(spec_arg, out_override);
        if (report->parsed()) return cmd_report(report_dir);
        if (field->parsed()) {
            if (finfo->parsed()) return cmd_field_info(field_path);
            return cmd_field_convert(conv_src, conv_dst);
        }
        if (preset->parsed()) {
            if (pshow->parsed()) {
                std::cout << pf::preset_text(preset_name);
                return 0;
            }
            for (const auto& n : pf::preset_names()) std::cout << n << "\n";
            return 0;
        }
    } catch (const pf::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pf::FieldIoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
