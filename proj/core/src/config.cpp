#include "bque/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bque {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("malformed number: " + v);
    return x;
}

long long parse_int(const std::string& v) {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("malformed integer: " + v);
    return x;
}

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        auto dbl = [&t](const std::string& key, auto member) {
            t[key] = {[member](PipelineConfig& c, const std::string& v) { c.*member = parse_double(v); },
                      [member](const PipelineConfig& c) { return fmt_double(c.*member); }};
        };
        (void)dbl;
        auto add = [&t](const std::string& key, auto setter, auto getter) {
            t[key] = {setter, getter};
        };

        add("domain.shape",
            [](PipelineConfig& c, const std::string& v) {
                if (v != "sinai" && v != "quarter_disk")
                    throw std::invalid_argument("domain.shape must be sinai or quarter_disk");
                c.domain.shape = v;
            },
            [](const PipelineConfig& c) { return c.domain.shape; });
        add("domain.theta1",
            [](PipelineConfig& c, const std::string& v) { c.domain.theta1 = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.domain.theta1); });
        add("domain.theta2",
            [](PipelineConfig& c, const std::string& v) { c.domain.theta2 = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.domain.theta2); });

        add("region.nu_x",
            [](PipelineConfig& c, const std::string& v) { c.region.nu_x = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.region.nu_x); });
        add("region.nu_y",
            [](PipelineConfig& c, const std::string& v) { c.region.nu_y = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.region.nu_y); });
        add("region.fraction",
            [](PipelineConfig& c, const std::string& v) { c.region.fraction = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.region.fraction); });

        add("classical.T",
            [](PipelineConfig& c, const std::string& v) { c.classical.T = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.classical.T); });
        add("classical.dt",
            [](PipelineConfig& c, const std::string& v) { c.classical.dt = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.classical.dt); });
        add("classical.n_r",
            [](PipelineConfig& c, const std::string& v) { c.classical.n_r = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.classical.n_r); });
        add("classical.omega_sm",
            [](PipelineConfig& c, const std::string& v) { c.classical.omega_sm = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.classical.omega_sm); });
        add("classical.seed",
            [](PipelineConfig& c, const std::string& v) { c.classical.seed = static_cast<std::uint64_t>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.classical.seed); });
        add("classical.t_corr",
            [](PipelineConfig& c, const std::string& v) { c.classical.t_corr = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.classical.t_corr); });
        add("classical.omega_cut",
            [](PipelineConfig& c, const std::string& v) { c.classical.omega_cut = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.classical.omega_cut); });

        add("solver.k_min",
            [](PipelineConfig& c, const std::string& v) { c.solver.k_min = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.k_min); });
        add("solver.k_max",
            [](PipelineConfig& c, const std::string& v) { c.solver.k_max = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.k_max); });
        add("solver.basis_factor",
            [](PipelineConfig& c, const std::string& v) { c.solver.basis_factor = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.basis_factor); });
        add("solver.n_min",
            [](PipelineConfig& c, const std::string& v) { c.solver.n_min = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.solver.n_min); });
        add("solver.ppw",
            [](PipelineConfig& c, const std::string& v) { c.solver.ppw = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.solver.ppw); });
        add("solver.truncation_tol",
            [](PipelineConfig& c, const std::string& v) { c.solver.truncation_tol = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.truncation_tol); });
        add("solver.spurious_tol",
            [](PipelineConfig& c, const std::string& v) { c.solver.spurious_tol = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.spurious_tol); });
        add("solver.omega_max",
            [](PipelineConfig& c, const std::string& v) { c.solver.omega_max = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.omega_max); });
        add("solver.step",
            [](PipelineConfig& c, const std::string& v) { c.solver.step = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.step); });
        add("solver.refine_offset",
            [](PipelineConfig& c, const std::string& v) { c.solver.refine_offset = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.refine_offset); });
        add("solver.dedupe_rel",
            [](PipelineConfig& c, const std::string& v) { c.solver.dedupe_rel = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.solver.dedupe_rel); });

        add("elements.ppw",
            [](PipelineConfig& c, const std::string& v) { c.elements.ppw = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.elements.ppw); });
        add("elements.degeneracy_tol",
            [](PipelineConfig& c, const std::string& v) { c.elements.degeneracy_tol = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.elements.degeneracy_tol); });

        add("stats.window_count",
            [](PipelineConfig& c, const std::string& v) { c.stats.window_count = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.stats.window_count); });
        add("stats.e_min",
            [](PipelineConfig& c, const std::string& v) { c.stats.e_min = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.e_min); });
        add("stats.bin_width",
            [](PipelineConfig& c, const std::string& v) { c.stats.bin_width = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.bin_width); });
        add("stats.eps",
            [](PipelineConfig& c, const std::string& v) { c.stats.eps = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.eps); });
        add("stats.band_omega_range",
            [](PipelineConfig& c, const std::string& v) { c.stats.band_omega_range = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.band_omega_range); });
        add("stats.band_k_lo",
            [](PipelineConfig& c, const std::string& v) { c.stats.band_k_lo = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.band_k_lo); });
        add("stats.band_k_hi",
            [](PipelineConfig& c, const std::string& v) { c.stats.band_k_hi = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.band_k_hi); });
        add("stats.g_eps",
            [](PipelineConfig& c, const std::string& v) { c.stats.g_eps = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.g_eps); });
        add("stats.exceed_sigmas",
            [](PipelineConfig& c, const std::string& v) { c.stats.exceed_sigmas = parse_double(v); },
            [](const PipelineConfig& c) { return fmt_double(c.stats.exceed_sigmas); });
        add("stats.hist_bins",
            [](PipelineConfig& c, const std::string& v) { c.stats.hist_bins = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.stats.hist_bins); });

        add("rw.n_theta",
            [](PipelineConfig& c, const std::string& v) { c.rw.n_theta = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.rw.n_theta); });
        add("rw.n_radial",
            [](PipelineConfig& c, const std::string& v) { c.rw.n_radial = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.rw.n_radial); });
        add("rw.n_phi",
            [](PipelineConfig& c, const std::string& v) { c.rw.n_phi = static_cast<int>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.rw.n_phi); });
        add("rw.mc_pairs",
            [](PipelineConfig& c, const std::string& v) { c.rw.mc_pairs = parse_int(v); },
            [](const PipelineConfig& c) { return std::to_string(c.rw.mc_pairs); });
        add("rw.seed",
            [](PipelineConfig& c, const std::string& v) { c.rw.seed = static_cast<std::uint64_t>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.rw.seed); });

        add("run.output_dir",
            [](PipelineConfig& c, const std::string& v) { c.run.output_dir = v; },
            [](const PipelineConfig& c) { return c.run.output_dir; });
        add("run.workers",
            [](PipelineConfig& c, const std::string& v) { c.run.workers = static_cast<unsigned>(parse_int(v)); },
            [](const PipelineConfig& c) { return std::to_string(c.run.workers); });
        return t;
    }();
    return table;
}

}  // namespace

PipelineConfig PipelineConfig::parse(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = field_table();
        const auto it = table.find(key);
        if (it == table.end())
            throw std::invalid_argument("unknown config key: " + key);
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string PipelineConfig::serialize() const {
    std::string out;
    for (const auto& [key, field] : field_table()) {
        out += key;
        out += " = ";
        out += field.get(*this);
        out += "\n";
    }
    return out;
}

std::uint64_t PipelineConfig::hash() const {
    // run.* keys (output path, worker count) do not affect the results and
    // are excluded from the identity hash
    std::istringstream in(serialize());
    std::string line;
    std::uint64_t h = 1469598103934665603ull;
    while (std::getline(in, line)) {
        if (line.compare(0, 4, "run.") == 0) continue;
        for (unsigned char c : line) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= '\n';
        h *= 1099511628211ull;
    }
    return h;
}

void PipelineConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("config validation: ") + what);
    };
    require(domain.theta1 > 0 && domain.theta1 < 1.5707963, "theta1 must lie in (0, pi/2)");
    require(domain.theta2 > 0 && domain.theta2 < 1.5707963, "theta2 must lie in (0, pi/2)");
    require(region.fraction > 0 && region.fraction < 1, "region fraction must lie in (0,1)");
    require(region.nu_x != 0 || region.nu_y != 0, "region normal must be nonzero");
    require(classical.T > 0, "classical T must be positive");
    require(classical.dt > 0 && classical.dt < classical.T, "classical dt must lie in (0, T)");
    require(classical.n_r >= 2, "classical n_r must be at least 2");
    require(classical.omega_sm > 0, "classical omega_sm must be positive");
    require(classical.t_corr > 0, "classical t_corr must be positive");
    require(classical.omega_cut > 0, "classical omega_cut must be positive");
    require(solver.k_min > 0 && solver.k_max > solver.k_min, "solver k range must satisfy 0 < k_min < k_max");
    require(solver.basis_factor > 0, "solver basis_factor must be positive");
    require(solver.ppw >= 4, "solver ppw must be at least 4");
    require(solver.truncation_tol > 0, "solver truncation_tol must be positive");
    require(solver.spurious_tol > 0, "solver spurious_tol must be positive");
    require(solver.refine_offset > 0, "solver refine_offset must be positive");
    require(solver.dedupe_rel > 0, "solver dedupe_rel must be positive");
    require(elements.ppw >= 4, "elements ppw must be at least 4");
    require(stats.bin_width > 0 && stats.eps > 0, "stats bins must be positive");
    require(stats.band_omega_range > 0, "stats band range must be positive");
    require(stats.exceed_sigmas > 0, "stats exceedance threshold must be positive");
    require(stats.hist_bins >= 4, "stats hist_bins must be at least 4");
    require(rw.n_theta > 0 && rw.n_radial > 0 && rw.n_phi > 0, "rw resolutions must be positive");
    require(rw.mc_pairs >= 1000, "rw mc_pairs must be at least 1000");
    require(!run.output_dir.empty(), "output_dir must not be empty");
}

}  // namespace bque
