#pragma once

#include <cstdint>
#include <string>

namespace bque {

/// Full experiment configuration, parsed from "namespace.key = value" text
/// (one namespace per module, # comments, empty file = defaults). Unknown
/// keys are rejected; all physical parameters are validated on parse.
struct PipelineConfig {
    struct Domain {
        std::string shape = "sinai";  // sinai | quarter_disk
        double theta1 = 0.4;
        double theta2 = 0.7;
        bool operator==(const Domain&) const = default;
    } domain;

    struct Region {
        double nu_x = 1.0;
        double nu_y = 2.0;
        double fraction = 0.55;
        bool operator==(const Region&) const = default;
    } region;

    struct Classical {
        double T = 1e4;
        double dt = 0.02;
        int n_r = 6000;
        double omega_sm = 0.03;
        std::uint64_t seed = 1;
        double t_corr = 2.0;
        double omega_cut = 8.0;  // export range of the spectrum CSV
        bool operator==(const Classical&) const = default;
    } classical;

    struct Solver {
        double k_min = 100.0;
        double k_max = 102.0;
        double basis_factor = 1.5;
        int n_min = 8;
        int ppw = 10;
        double truncation_tol = 1e-12;
        double spurious_tol = 1e-2;
        double omega_max = 0.0;      // 0: window rule 0.2 / R_max
        double step = 0.0;           // 0: omega_max
        double refine_offset = 1e-3;
        double dedupe_rel = 1e-6;
        bool operator==(const Solver&) const = default;
    } solver;

    struct Elements {
        int ppw = 10;
        double degeneracy_tol = 1e-8;
        bool operator==(const Elements&) const = default;
    } elements;

    struct Stats {
        int window_count = 0;        // 0: adaptive ~ total/8 in [50, 1000]
        double e_min = 0.0;          // 0: stability rule
        double bin_width = 0.1;
        double eps = 0.05;
        double band_omega_range = 3.0;
        double band_k_lo = 0.0;      // 0: central part of the catalog
        double band_k_hi = 0.0;
        double g_eps = 0.5;          // near-diagonal half-width for the g factor
        double exceed_sigmas = 5.0;
        int hist_bins = 40;
        bool operator==(const Stats&) const = default;
    } stats;

    struct Rw {
        int n_theta = 384;
        int n_radial = 220;
        int n_phi = 720;
        long long mc_pairs = 4000000;
        std::uint64_t seed = 12345;
        bool operator==(const Rw&) const = default;
    } rw;

    struct Run {
        std::string output_dir = "out";
        unsigned workers = 0;
        bool operator==(const Run&) const = default;
    } run;

    bool operator==(const PipelineConfig&) const = default;

    static PipelineConfig parse(const std::string& text);
    static PipelineConfig load(const std::string& path);
    std::string serialize() const;
    /// FNV-1a hash of the canonical serialization, stamped into outputs.
    std::uint64_t hash() const;
    void validate() const;
};

}  // namespace bque
