// dvars: DVARS and standardized DVARS quality control for 4D time series.
//
// Exit codes: 0 success, 1 error, 2 success with at least one flagged frame.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dvars/error.hpp"
#include "dvars/mask.hpp"
#include "dvars/nifti.hpp"
#include "dvars/pipeline.hpp"
#include "dvars/report.hpp"
#include "dvars/selftest.hpp"
#include "dvars/simulate.hpp"
#include "dvars/tsv.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFlagged = 2;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_nifti_path(const std::string& p) {
    return ends_with(p, ".nii") || ends_with(p, ".nii.gz") || ends_with(p, ".hdr") || ends_with(p, ".hdr.gz");
}

dvars::TimeSeriesVolume load_input(const std::string& path) {
    if (!fs::exists(path)) throw dvars::IoError("input file not found: " + path);
    return is_nifti_path(path) ? dvars::nifti::load_nifti(path) : dvars::load_tsv_matrix(path);
}

std::string sidecar_path(const std::string& volume_path) {
    std::string stem = volume_path;
    for (const char* ext : {".nii.gz", ".nii"}) {
        if (ends_with(stem, ext)) {
            stem.resize(stem.size() - std::string(ext).size());
            break;
        }
    }
    return stem + "_params.tsv";
}

bool parse_on_off(const std::string& v) { return v == "on"; }

struct ComputeArgs {
    std::string input;
    std::string mask_path;
    std::string mask_strategy = "mean-frac=0.1";
    std::string robust_sigma = "on";
    std::string detrend = "off";
    std::string variants = "raw,star,starstar";
    std::string flag = "zrobust=5";
    std::string params_path;
    std::string output = "-";
    std::string format = "tsv";
};

struct SimulateArgs {
    std::string spec;
    std::string output;
    std::optional<std::uint64_t> seed;
};

struct SelftestArgs {
    bool force_fail = false;
    bool full = false;
};

int run_compute(const ComputeArgs& a) {
    const auto volume = load_input(a.input);
    const bool have_mask_file = !a.mask_path.empty();
    const dvars::Mask mask = have_mask_file
                                 ? dvars::nifti::load_mask(a.mask_path, volume.geometry())
                                 : dvars::derive_mask(volume, dvars::parse_mask_strategy(a.mask_strategy));

    dvars::ComputeOptions options;
    options.estimation.robust_sigma = parse_on_off(a.robust_sigma);
    options.estimation.detrend = parse_on_off(a.detrend);
    options.variants = dvars::parse_variants(a.variants);
    options.policy = dvars::parse_flag_policy(a.flag);
    options.input_label = a.input;
    options.mask_label = have_mask_file ? "file:" + a.mask_path : a.mask_strategy;
    if (!a.params_path.empty()) {
        options.supplied_params = dvars::load_params_sidecar(a.params_path, volume.geometry());
    }

    const auto report = dvars::run_qc(volume, mask, options);
    for (const auto& w : report.meta.warnings) std::cerr << "dvars: warning: " << w << '\n';
    dvars::write_report(report, a.output, dvars::parse_report_format(a.format));
    return report.summary.flagged_frames > 0 ? kExitFlagged : kExitOk;
}

int run_simulate(const SimulateArgs& a) {
    std::ifstream in(a.spec);
    if (!in) throw dvars::IoError("cannot open simulation spec " + a.spec);
    std::ostringstream text;
    text << in.rdbuf();
    auto spec = dvars::parse_simulation_spec(text.str());
    if (a.seed) spec.seed = *a.seed;

    const auto sim = dvars::simulate_ar1_volume(spec);
    dvars::nifti::write_nifti(sim.volume, a.output, {dvars::nifti::DataType::Float64});
    const auto sidecar = sidecar_path(a.output);
    std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
    if (!out) throw dvars::IoError("cannot write " + sidecar);
    out << dvars::params_sidecar_text(sim);
    if (!out.flush()) throw dvars::IoError("error while writing " + sidecar);
    std::cerr << "dvars: wrote " << a.output << " and " << sidecar << '\n';
    return kExitOk;
}

int run_selftest(const SelftestArgs& a) {
    dvars::SelftestOptions options;
    options.scale = a.full ? dvars::AcceptanceScale::full() : dvars::AcceptanceScale::reduced();
    options.force_fail = a.force_fail;
    return dvars::run_selftest(options, std::cout) ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DVARS and standardized DVARS (DVARS*, DVARS**) for 4D time series"};
    app.set_version_flag("--version", dvars::kToolVersion);
    app.require_subcommand(1, 1);

    ComputeArgs compute;
    auto* c = app.add_subcommand("compute", "Compute DVARS variants and flag outlier frames");
    c->add_option("--input", compute.input, "NIfTI-1 volume (.nii, .nii.gz) or TSV/CSV matrix")->required();
    auto* mask_opt = c->add_option("--mask", compute.mask_path, "3D NIfTI mask (voxels > 0 included)");
    auto* strategy_opt =
        c->add_option("--mask-strategy", compute.mask_strategy, "all | nonzero-mean | mean-frac=F | nonconstant")
            ->capture_default_str();
    mask_opt->excludes(strategy_opt);
    c->add_option("--robust-sigma", compute.robust_sigma, "IQR/1.349 sigma estimate")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    c->add_option("--detrend", compute.detrend, "remove a linear trend before estimating noise parameters")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    c->add_option("--variants", compute.variants, "comma-separated subset of raw,star,starstar")
        ->capture_default_str();
    c->add_option("--flag", compute.flag, "abs=T | zrobust=Z | none (applied to DVARS*)")->capture_default_str();
    c->add_option("--params", compute.params_path, "known per-voxel parameters (simulate sidecar) instead of estimates");
    c->add_option("--output", compute.output, "report path, - for stdout")->capture_default_str();
    c->add_option("--format", compute.format, "tsv | json")
        ->check(CLI::IsMember({"tsv", "json"}))
        ->capture_default_str();

    SimulateArgs simulate;
    auto* s = app.add_subcommand("simulate", "Write a synthetic AR(1) volume and its true parameters");
    s->add_option("--spec", simulate.spec, "key = value simulation spec")->required();
    s->add_option("--seed", simulate.seed, "override the spec seed");
    s->add_option("--output", simulate.output, "output NIfTI-1 path")->required();

    SelftestArgs selftest;
    auto* t = app.add_subcommand("selftest", "Run the built-in calibration and invariance checks");
    t->add_flag("--full", selftest.full, "use full acceptance problem sizes");
    t->add_flag("--force-fail", selftest.force_fail)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (c->parsed()) return run_compute(compute);
        if (s->parsed()) return run_simulate(simulate);
        return run_selftest(selftest);
    } catch (const std::exception& e) {
        std::cerr << "dvars: error: " << e.what() << '\n';
        return kExitError;
    }
}
