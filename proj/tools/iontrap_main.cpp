// Command-line front end: solve -> site -> fit -> path -> heat -> report
// pipelines over a layout file, with deterministic tabular exports.

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "iontrap/anharmonic.hpp"
#include "iontrap/demo_layouts.hpp"
#include "iontrap/field_basis.hpp"
#include "iontrap/field_grid.hpp"
#include "iontrap/heating.hpp"
#include "iontrap/layout.hpp"
#include "iontrap/pseudo.hpp"
#include "iontrap/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Exit-status contract (documented in the README):
//   0 success, 2 config, 3 geometry/validation, 4 solver,
//   5 convergence/fit/domain, 6 dependency, 7 lock contention.
enum ExitCode {
    kOk = 0,
    kConfigError = 2,
    kGeometryError = 3,
    kSolverError = 4,
    kConvergenceError = 5,
    kDependencyError = 6,
    kLockError = 7,
};

struct RunConfig {
    std::string config_path;
    std::string layout_path;
    std::string output_dir;
    std::string cache_dir; // empty = <output_dir>/cache, env overrides

    double rf_amplitude_V = 190.0;
    double rf_frequency_hz = 44.3e6;
    std::map<std::string, double> dc_voltages;

    std::string species_name = "171Yb+";
    double mass_amu = 171.0;
    int charge_e = 1;

    double panel_size_um = 25.0;
    double residual_tol = 1e-6;
    std::size_t max_panels = 20000;
    int threads = 0;

    bool has_site = false;
    std::array<double, 3> seed_um{0.0, 0.0, 80.0};
    bool compute_depth = true;

    bool has_fit = false;
    double fit_window_um = 5.0;
    int fit_stencil = 21;
    int fit_max_order = 4;

    bool has_path = false;
    double x_min_um = 0.0;
    double x_max_um = 300.0;
    double dx_um = 1.0;
    double c_target_ev_m2 = 0.0; // 0 = use the site's confinement
    double z_min_um = 5.0;
    double z_max_um = 200.0;

    bool has_heat = false;
    double noise_dbc = -178.0;
    double axial_freq_hz = 1.13e6;
    double speed_m_s = 4.0;

    std::string compare_layout; // optional report compare-mode
    std::array<double, 3> compare_seed_um{0.0, 0.0, 74.0};
};

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw iontrap::config_error("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw iontrap::config_error("malformed config '" + path + "': " + e.what());
    }
    RunConfig c;
    c.config_path = path;
    try {
        c.layout_path = j.at("layout").get<std::string>();
        c.output_dir = j.at("output_dir").get<std::string>();
        c.cache_dir = j.value("cache_dir", std::string{});
        if (j.contains("drive")) {
            const auto& jd = j["drive"];
            c.rf_amplitude_V = jd.value("rf_amplitude_V", c.rf_amplitude_V);
            c.rf_frequency_hz = jd.value("rf_frequency_hz", c.rf_frequency_hz);
            if (jd.contains("dc_voltages"))
                c.dc_voltages = jd["dc_voltages"].get<std::map<std::string, double>>();
        }
        if (j.contains("species")) {
            const auto& js = j["species"];
            c.species_name = js.value("name", c.species_name);
            c.mass_amu = js.value("mass_amu", c.mass_amu);
            c.charge_e = js.value("charge_e", c.charge_e);
        }
        if (j.contains("solver")) {
            const auto& js = j["solver"];
            c.panel_size_um = js.value("target_panel_size_um", c.panel_size_um);
            c.residual_tol = js.value("residual_tol", c.residual_tol);
            c.max_panels = js.value("max_panels", c.max_panels);
            c.threads = js.value("threads", c.threads);
        }
        if (j.contains("site")) {
            c.has_site = true;
            const auto& js = j["site"];
            if (js.contains("seed_um")) c.seed_um = js["seed_um"].get<std::array<double, 3>>();
            c.compute_depth = js.value("compute_depth", true);
        }
        if (j.contains("fit")) {
            c.has_fit = true;
            const auto& jf = j["fit"];
            c.fit_window_um = jf.value("window_um", c.fit_window_um);
            c.fit_stencil = jf.value("stencil", c.fit_stencil);
            c.fit_max_order = jf.value("max_order", c.fit_max_order);
        }
        if (j.contains("path")) {
            c.has_path = true;
            const auto& jp = j["path"];
            c.x_min_um = jp.value("x_min_um", c.x_min_um);
            c.x_max_um = jp.value("x_max_um", c.x_max_um);
            c.dx_um = jp.value("dx_um", c.dx_um);
            c.c_target_ev_m2 = jp.value("c_target_ev_m2", c.c_target_ev_m2);
            c.z_min_um = jp.value("z_min_um", c.z_min_um);
            c.z_max_um = jp.value("z_max_um", c.z_max_um);
        }
        if (j.contains("heat")) {
            c.has_heat = true;
            const auto& jh = j["heat"];
            c.noise_dbc = jh.value("noise_dbc", c.noise_dbc);
            c.axial_freq_hz = jh.value("axial_freq_hz", c.axial_freq_hz);
            c.speed_m_s = jh.value("speed_m_s", c.speed_m_s);
        }
        if (j.contains("report")) {
            const auto& jr = j["report"];
            c.compare_layout = jr.value("compare_layout", std::string{});
            if (jr.contains("compare_seed_um"))
                c.compare_seed_um = jr["compare_seed_um"].get<std::array<double, 3>>();
        }
    } catch (const json::exception& e) {
        throw iontrap::config_error("bad config key in '" + path + "': " + e.what());
    }
    return c;
}

void validate_config(const RunConfig& c) {
    if (c.layout_path.empty() || !fs::exists(c.layout_path))
        throw iontrap::config_error("layout file '" + c.layout_path + "' does not exist");
    if (c.output_dir.empty()) throw iontrap::config_error("output_dir is required");
    if (c.rf_frequency_hz <= 0.0 || c.mass_amu <= 0.0 || c.charge_e < 1 ||
        c.panel_size_um <= 0.0 || c.dx_um <= 0.0)
        throw iontrap::config_error("parameter ranges must be positive");
    std::error_code ec;
    fs::create_directories(c.output_dir, ec);
    if (ec) throw iontrap::config_error("cannot create output_dir '" + c.output_dir + "'");
}

// Concurrent invocations on one output directory are rejected, not queued.
class LockFile {
public:
    explicit LockFile(const fs::path& dir) : path_(dir / ".iontrap.lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw iontrap::config_error("output directory is locked by another invocation (" +
                                        path_.string() + ")");
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto n = ::write(fd_, pid.c_str(), pid.size());
    }
    ~LockFile() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string content_hash(const RunConfig& c) {
    std::ifstream in(c.layout_path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char settings[256];
    std::snprintf(settings, sizeof settings, "panel=%.9g;tol=%.9g;max=%zu", c.panel_size_um,
                  c.residual_tol, c.max_panels);
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes + "|" + settings)));
    return hex;
}

fs::path cache_dir_for(const RunConfig& c) {
    if (const char* env = std::getenv("IONTRAP_CACHE_DIR"); env && *env) return fs::path(env);
    if (!c.cache_dir.empty()) return fs::path(c.cache_dir);
    return fs::path(c.output_dir) / "cache";
}

iontrap::PseudoParams pseudo_params(const RunConfig& c) {
    return iontrap::PseudoParams{
        iontrap::make_species(c.species_name, c.mass_amu, c.charge_e),
        iontrap::make_drive(c.rf_amplitude_V, c.rf_frequency_hz, c.dc_voltages)};
}

iontrap::FieldBasisOptions basis_options(const RunConfig& c) {
    iontrap::FieldBasisOptions opts;
    opts.target_panel_size_um = c.panel_size_um;
    opts.bem.mirror_plane = true;
    opts.bem.residual_tol = c.residual_tol;
    opts.bem.max_panels = c.max_panels;
    opts.bem.threads = c.threads;
    return opts;
}

// Reload the basis for this config from the solve cache.
iontrap::FieldBasis basis_from_cache(const RunConfig& c) {
    const fs::path cache = cache_dir_for(c) / (content_hash(c) + ".json");
    if (!fs::exists(cache))
        throw iontrap::dependency_error("missing solve artifact " + cache.string() +
                                        "; run 'iontrap solve' first");
    std::ifstream in(cache);
    json j = json::parse(in);
    const auto layout = iontrap::load_layout(c.layout_path);
    iontrap::validate_drive(pseudo_params(c).drive, layout);
    const auto charges = j.at("charges").get<std::vector<std::vector<double>>>();
    return iontrap::FieldBasis::from_cached_charges(layout, basis_options(c), charges);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw iontrap::config_error("cannot write '" + path.string() + "'");
    out << text;
}

json read_json_artifact(const RunConfig& c, const std::string& name,
                        const std::string& producer) {
    const fs::path p = fs::path(c.output_dir) / name;
    if (!fs::exists(p))
        throw iontrap::dependency_error("missing artifact '" + name + "'; run 'iontrap " +
                                        producer + "' first");
    std::ifstream in(p);
    return json::parse(in);
}

// --- subcommands -------------------------------------------------------------

int cmd_validate(const RunConfig& c) {
    const auto layout = iontrap::load_layout(c.layout_path);
    iontrap::validate_drive(pseudo_params(c).drive, layout);
    std::cout << "layout '" << c.layout_path << "' is valid: " << layout.electrodes.size()
              << " electrodes, " << layout.total_panels() << " raw panels\n";
    return kOk;
}

int cmd_solve(const RunConfig& c) {
    const fs::path cache_dir = cache_dir_for(c);
    fs::create_directories(cache_dir);
    const std::string hash = content_hash(c);
    const fs::path cache = cache_dir / (hash + ".json");

    ordered_json meta;
    meta["layout"] = c.layout_path;
    meta["hash"] = hash;
    if (fs::exists(cache)) {
        std::ifstream in(cache);
        const json cached = json::parse(in);
        meta["cache"] = "hit";
        meta["panel_count"] = cached.value("panel_count", 0);
        meta["residual"] = cached.value("residual", 0.0);
        meta["condition_estimate"] = cached.value("condition_estimate", 0.0);
        write_text(fs::path(c.output_dir) / "solve.json", meta.dump(2) + "\n");
        std::cout << "solve: cache hit (" << cache.string() << ")\n";
        return kOk;
    }

    const auto layout = iontrap::load_layout(c.layout_path);
    iontrap::validate_drive(pseudo_params(c).drive, layout);
    const auto basis = iontrap::FieldBasis::solve(layout, basis_options(c));

    ordered_json jcache;
    jcache["hash"] = hash;
    jcache["panel_count"] = basis.panel_count();
    jcache["residual"] = basis.metadata().residual;
    jcache["condition_estimate"] = basis.metadata().condition_estimate;
    jcache["electrodes"] = basis.electrode_ids();
    std::vector<std::vector<double>> charges;
    for (const auto& v : basis.charge_vectors())
        charges.emplace_back(v.data(), v.data() + v.size());
    jcache["charges"] = charges;
    write_text(cache, jcache.dump() + "\n");

    meta["cache"] = "miss";
    meta["panel_count"] = basis.panel_count();
    meta["residual"] = basis.metadata().residual;
    meta["condition_estimate"] = basis.metadata().condition_estimate;
    write_text(fs::path(c.output_dir) / "solve.json", meta.dump(2) + "\n");
    std::cout << "solve: " << basis.panel_count() << " panels, residual "
              << basis.metadata().residual << "\n";
    return kOk;
}

int cmd_site(const RunConfig& c) {
    const auto basis = basis_from_cache(c);
    const auto params = pseudo_params(c);
    const auto u = iontrap::make_pseudo_field(basis, params);
    const iontrap::Vec3 seed{c.seed_um[0], c.seed_um[1], c.seed_um[2]};
    const auto pos = iontrap::find_minimum(u, seed);
    auto site = iontrap::harmonic_analysis(u, pos, params);
    ordered_json j;
    if (c.compute_depth) {
        const auto depth = iontrap::trap_depth(u, site, basis.bounding_box());
        site.depth_ev = depth.depth_ev;
        site.escape_direction = depth.escape_direction;
        site.depth_boundary_limited = depth.boundary_limited;
        j = iontrap::trap_site_report(site);
        j["depth_boundary_limited"] = depth.boundary_limited;
        j["escape_direction"] = {depth.escape_direction.x, depth.escape_direction.y,
                                 depth.escape_direction.z};
    } else {
        j = iontrap::trap_site_report(site);
    }
    j["residual_qphi_ev"] = u(pos);
    j["micromotion_amplitude_m"] = iontrap::micromotion_amplitude(u(pos), params);
    write_text(fs::path(c.output_dir) / "trapsite.json", j.dump(2) + "\n");
    std::cout << "site: minimum at (" << pos.x << ", " << pos.y << ", " << pos.z
              << ") um, freq_z " << site.freq_hz[2] / 1e6 << " MHz\n";
    return kOk;
}

int cmd_fit(const RunConfig& c) {
    const auto jsite = read_json_artifact(c, "trapsite.json", "site");
    const auto basis = basis_from_cache(c);
    const auto params = pseudo_params(c);
    const auto u = iontrap::make_pseudo_field(basis, params);

    iontrap::TrapSite site;
    const auto pos = jsite.at("position_um");
    site.position_um = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
    for (int i = 0; i < 3; ++i) {
        site.freq_hz[i] = jsite.at("freq_hz")[i].get<double>();
        for (int k = 0; k < 3; ++k) site.axes[i][k] = jsite.at("axes")[i][k].get<double>();
    }

    iontrap::FitOptions opts;
    opts.window_um = c.fit_window_um;
    opts.stencil = c.fit_stencil;
    opts.max_order = c.fit_max_order;
    const auto fit = iontrap::fit_expansion(u, site, params, opts);

    std::ostringstream table;
    iontrap::write_fit_csv(fit, table);
    write_text(fs::path(c.output_dir) / "anharmonic_fit.csv", table.str());

    ordered_json j;
    j["window_um"] = fit.window_um;
    j["max_order"] = fit.max_order;
    j["residual_rms_ev"] = fit.residual_rms_ev;
    j["normalization_discrepancy"] = fit.normalization_discrepancy;
    ordered_json jc = ordered_json::array();
    for (const auto& [ijk, value] : fit.coeffs) {
        jc.push_back({{"i", ijk[0]}, {"j", ijk[1]}, {"k", ijk[2]}, {"C_ijk", value}});
    }
    j["coefficients"] = jc;
    if (fit.max_order >= 4) {
        const auto sc = iontrap::shift_coeffs(fit);
        j["alpha2_per_um2"] = sc.alpha2_per_um2;
        j["alpha3_per_um3"] = sc.alpha3_per_um3;
    }
    write_text(fs::path(c.output_dir) / "fit.json", j.dump(2) + "\n");
    std::cout << "fit: C003 = " << fit.coeff(0, 0, 3) << " um^-1, residual "
              << fit.residual_rms_ev << " eV\n";
    return kOk;
}

int cmd_path(const RunConfig& c) {
    const auto basis = basis_from_cache(c);
    const auto params = pseudo_params(c);
    const auto u = iontrap::make_pseudo_field(basis, params);

    double c_target = c.c_target_ev_m2;
    if (c_target <= 0.0) {
        const auto jsite = read_json_artifact(c, "trapsite.json", "site");
        c_target = jsite.at("confinement_ev_m2").get<double>();
    }

    iontrap::PathOptions opts;
    opts.z_min_um = c.z_min_um;
    opts.z_max_um = c.z_max_um;
    opts.diff.step_um = 0.5;
    opts.diff.richardson = false;
    opts.solve_tol_um = 1e-4;

    const auto min_path = iontrap::minimum_path(u, c.x_min_um, c.x_max_um, c.dx_um, opts);
    const auto ctc = iontrap::ctc_path(u, params, c_target, c.x_min_um, c.x_max_um, c.dx_um, opts);

    std::ostringstream min_csv, ctc_csv;
    iontrap::write_path_csv(min_path, min_csv);
    iontrap::write_path_csv(ctc, ctc_csv);
    write_text(fs::path(c.output_dir) / "path_minimum.csv", min_csv.str());
    write_text(fs::path(c.output_dir) / "path_ctc.csv", ctc_csv.str());

    const auto metrics_min = iontrap::path_metrics(min_path);
    const auto metrics_ctc = iontrap::path_metrics(ctc, &min_path);
    ordered_json j;
    j["c_target_ev_m2"] = c_target;
    auto fill = [](const iontrap::PathMetrics& m) {
        return ordered_json{{"max_barrier_ev", m.max_barrier_ev},
                            {"min_confinement_fraction", m.min_confinement_fraction},
                            {"min_height_um", m.min_height_um},
                            {"max_height_um", m.max_height_um}};
    };
    j["minimum_path"] = fill(metrics_min);
    j["ctc_path"] = fill(metrics_ctc);
    j["ctc_max_height_deviation_um"] = metrics_ctc.max_height_deviation_um;
    if (min_path.samples.size() == ctc.samples.size()) {
        const auto overlap = iontrap::path_overlap(min_path, ctc);
        j["overlap"] = {{"max_separation_um", overlap.max_separation_um},
                        {"rms_separation_um", overlap.rms_separation_um}};
    }
    if (!min_path.truncation_reason.empty())
        j["minimum_path_truncated"] = min_path.truncation_reason;
    write_text(fs::path(c.output_dir) / "path_metrics.json", j.dump(2) + "\n");
    std::cout << "path: " << min_path.samples.size() << " minimum-path samples, "
              << ctc.samples.size() << " CTC samples, C_target " << c_target << " eV/m^2\n";
    return kOk;
}

int cmd_heat(const RunConfig& c) {
    const fs::path ctc_file = fs::path(c.output_dir) / "path_ctc.csv";
    if (!fs::exists(ctc_file))
        throw iontrap::dependency_error(
            "missing artifact 'path_ctc.csv'; run 'iontrap path' first");
    std::ifstream in(ctc_file);
    const auto path = iontrap::read_path_csv(in, iontrap::PathKind::CTCPath);

    const auto params = pseudo_params(c);
    const auto noise = iontrap::NoiseSpec::from_dbc(c.noise_dbc);
    const double omega_x = iontrap::two_pi * c.axial_freq_hz;
    const auto profile = iontrap::heating_profile(path, noise, omega_x, params);
    const auto plan = iontrap::TransportPlan::constant_speed(path, c.speed_m_s);
    const double total = iontrap::round_trip_excitation(profile, plan);

    std::ostringstream csv;
    iontrap::write_heating_csv(profile, csv);
    write_text(fs::path(c.output_dir) / "heating_ctc.csv", csv.str());
    auto j = iontrap::heating_summary(profile, total);
    j["noise_dbc"] = c.noise_dbc;
    j["axial_freq_hz"] = c.axial_freq_hz;
    j["speed_m_s"] = c.speed_m_s;
    write_text(fs::path(c.output_dir) / "heating_summary.json", j.dump(2) + "\n");
    std::cout << "heat: round trip " << total << " quanta, peak " << profile.peak_ndot()
              << " quanta/s at x = " << profile.peak_x_um() << " um\n";
    return kOk;
}

int cmd_report(const RunConfig& c) {
    if (!fs::exists(fs::path(c.output_dir) / "solve.json"))
        throw iontrap::dependency_error("missing artifact 'solve.json'; run 'iontrap solve' first");
    ordered_json report;
    report["layout"] = c.layout_path;
    report["drive"] = {{"rf_amplitude_V", c.rf_amplitude_V},
                       {"rf_frequency_hz", c.rf_frequency_hz}};
    report["species"] = {{"name", c.species_name},
                         {"mass_amu", c.mass_amu},
                         {"charge_e", c.charge_e}};
    {
        std::ifstream in(fs::path(c.output_dir) / "solve.json");
        report["solve"] = json::parse(in);
    }

    // Sections follow the configured pipeline; configured-but-missing
    // artifacts are dependency errors, unconfigured stages are omitted.
    if (c.has_site) report["site"] = read_json_artifact(c, "trapsite.json", "site");
    if (c.has_fit) report["anharmonic"] = read_json_artifact(c, "fit.json", "fit");
    if (c.has_path) report["transport"] = read_json_artifact(c, "path_metrics.json", "path");
    if (c.has_heat) report["heating"] = read_json_artifact(c, "heating_summary.json", "heat");

    if (!c.compare_layout.empty()) {
        const auto cmp_layout = iontrap::load_layout(c.compare_layout);
        const auto params = pseudo_params(c);
        const auto cmp_basis = iontrap::FieldBasis::solve(cmp_layout, basis_options(c));
        const auto cmp_u = iontrap::make_pseudo_field(cmp_basis, params);
        const iontrap::Vec3 seed{c.compare_seed_um[0], c.compare_seed_um[1],
                                 c.compare_seed_um[2]};
        const auto cmp_pos = iontrap::find_minimum(cmp_u, seed);
        auto cmp_site = iontrap::harmonic_analysis(cmp_u, cmp_pos, params);
        const auto cmp_depth = iontrap::trap_depth(cmp_u, cmp_site, cmp_basis.bounding_box());
        cmp_site.depth_ev = cmp_depth.depth_ev;
        ordered_json jc;
        jc["layout"] = c.compare_layout;
        jc["site"] = iontrap::trap_site_report(cmp_site);
        if (c.has_site) {
            const auto& jsite = report["site"];
            const double f_main = jsite.at("freq_hz")[2].get<double>();
            const double d_main = jsite.at("depth_ev").get<double>();
            jc["frequency_ratio"] = f_main / cmp_site.freq_hz[2];
            jc["depth_ratio"] = d_main / cmp_site.depth_ev;
        }
        report["comparison"] = jc;
    }

    write_text(fs::path(c.output_dir) / "report.json", report.dump(2) + "\n");
    std::cout << "report: wrote " << (fs::path(c.output_dir) / "report.json").string() << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ion-trap pseudopotential analysis pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    RunConfig overrides;
    bool ov_layout = false, ov_outdir = false, ov_amp = false, ov_freq = false, ov_panel = false,
         ov_ctarget = false, ov_dbc = false, ov_speed = false;
    std::vector<double> seed_vec;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file (JSON)");
        sub->add_option("--layout", overrides.layout_path)->each([&](const std::string&) {
            ov_layout = true;
        });
        sub->add_option("--output-dir", overrides.output_dir)->each([&](const std::string&) {
            ov_outdir = true;
        });
        sub->add_option("--rf-amplitude-v", overrides.rf_amplitude_V)
            ->each([&](const std::string&) { ov_amp = true; });
        sub->add_option("--rf-frequency-hz", overrides.rf_frequency_hz)
            ->each([&](const std::string&) { ov_freq = true; });
        sub->add_option("--panel-size-um", overrides.panel_size_um)
            ->each([&](const std::string&) { ov_panel = true; });
        sub->add_option("--seed-um", seed_vec, "site seed, three values")->expected(3);
        sub->add_option("--c-target", overrides.c_target_ev_m2)
            ->each([&](const std::string&) { ov_ctarget = true; });
        sub->add_option("--noise-dbc", overrides.noise_dbc)->each([&](const std::string&) {
            ov_dbc = true;
        });
        sub->add_option("--speed-m-s", overrides.speed_m_s)->each([&](const std::string&) {
            ov_speed = true;
        });
    };

    CLI::App* s_validate = app.add_subcommand("validate", "load and validate a layout");
    CLI::App* s_solve = app.add_subcommand("solve", "solve the per-electrode field basis");
    CLI::App* s_site = app.add_subcommand("site", "locate and characterize the trap site");
    CLI::App* s_fit = app.add_subcommand("fit", "fit the anharmonic expansion at the site");
    CLI::App* s_path = app.add_subcommand("path", "extract minimum and CTC transport paths");
    CLI::App* s_heat = app.add_subcommand("heat", "heating profile and round-trip excitation");
    CLI::App* s_report = app.add_subcommand("report", "aggregate pipeline summary");
    for (auto* sub : {s_validate, s_solve, s_site, s_fit, s_path, s_heat, s_report})
        add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (config_path.empty()) throw iontrap::config_error("--config is required");
        RunConfig cfg = load_config(config_path);
        if (ov_layout) cfg.layout_path = overrides.layout_path;
        if (ov_outdir) cfg.output_dir = overrides.output_dir;
        if (ov_amp) cfg.rf_amplitude_V = overrides.rf_amplitude_V;
        if (ov_freq) cfg.rf_frequency_hz = overrides.rf_frequency_hz;
        if (ov_panel) cfg.panel_size_um = overrides.panel_size_um;
        if (seed_vec.size() == 3) cfg.seed_um = {seed_vec[0], seed_vec[1], seed_vec[2]};
        if (ov_ctarget) cfg.c_target_ev_m2 = overrides.c_target_ev_m2;
        if (ov_dbc) cfg.noise_dbc = overrides.noise_dbc;
        if (ov_speed) cfg.speed_m_s = overrides.speed_m_s;
        validate_config(cfg);

        LockFile lock(cfg.output_dir);
        if (s_validate->parsed()) return cmd_validate(cfg);
        if (s_solve->parsed()) return cmd_solve(cfg);
        if (s_site->parsed()) return cmd_site(cfg);
        if (s_fit->parsed()) return cmd_fit(cfg);
        if (s_path->parsed()) return cmd_path(cfg);
        if (s_heat->parsed()) return cmd_heat(cfg);
        if (s_report->parsed()) return cmd_report(cfg);
        throw iontrap::config_error("no subcommand");
    } catch (const iontrap::config_error& e) {
        if (std::string(e.what()).find("locked") != std::string::npos) {
            std::cerr << R"({"error":{"kind":"lock","message":")" << e.what() << "\"}}\n";
            return kLockError;
        }
        std::cerr << R"({"error":{"kind":"config","message":")" << e.what() << "\"}}\n";
        return kConfigError;
    } catch (const iontrap::parse_error& e) {
        std::cerr << R"({"error":{"kind":"parse","message":")" << e.what() << "\"}}\n";
        return kGeometryError;
    } catch (const iontrap::validation_error& e) {
        std::cerr << R"({"error":{"kind":"validation","message":")" << e.what() << "\"}}\n";
        return kGeometryError;
    } catch (const iontrap::geometry_error& e) {
        std::cerr << R"({"error":{"kind":"geometry","message":")" << e.what() << "\"}}\n";
        return kGeometryError;
    } catch (const iontrap::solver_error& e) {
        std::cerr << R"({"error":{"kind":"solver","message":")" << e.what() << "\"}}\n";
        return kSolverError;
    } catch (const iontrap::dependency_error& e) {
        std::cerr << R"({"error":{"kind":"dependency","message":")" << e.what() << "\"}}\n";
        return kDependencyError;
    } catch (const iontrap::error& e) {
        // convergence, fit, domain
        std::cerr << R"({"error":{"kind":"convergence","message":")" << e.what() << "\"}}\n";
        return kConvergenceError;
    } catch (const std::exception& e) {
        std::cerr << R"({"error":{"kind":"internal","message":")" << e.what() << "\"}}\n";
        return kConvergenceError;
    }
}
