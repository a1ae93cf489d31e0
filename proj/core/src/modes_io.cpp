#include "bque/modes_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bque {

static_assert(std::endian::native == std::endian::little,
              "eigenmode files are little-endian; big-endian hosts are unsupported");

namespace {

constexpr std::uint32_t kMagic = 0x4D455142;  // "BQEM"
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated eigenmode file");
}

}  // namespace

void save_catalog(const std::string& path, std::uint64_t domain_hash,
                  const SpectrumCatalog& catalog) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    put(out, kMagic);
    put(out, kVersion);
    put(out, domain_hash);
    put(out, static_cast<std::uint32_t>(catalog.windows.size()));
    for (const auto& w : catalog.windows) {
        put(out, w.k_center);
        put(out, w.basis.k());
        put(out, w.basis.offset_distance());
        put(out, static_cast<std::uint32_t>(w.basis.size()));
        for (const auto& q : w.basis.charges()) {
            put(out, q.x);
            put(out, q.y);
        }
        put(out, static_cast<std::uint32_t>(w.modes.size()));
        for (const auto& m : w.modes) {
            put(out, m.k);
            put(out, m.omega);
            put(out, m.mu);
            put(out, m.rellich_norm);
            put(out, m.k_center);
            put(out, static_cast<std::uint32_t>(m.coeffs.size()));
            out.write(reinterpret_cast<const char*>(m.coeffs.data()),
                      static_cast<std::streamsize>(m.coeffs.size() * sizeof(double)));
        }
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

SpectrumCatalog load_catalog(const std::string& path, std::uint64_t expected_domain_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open eigenmode file: " + path);
    std::uint32_t magic = 0, version = 0;
    std::uint64_t domain_hash = 0;
    get(in, magic);
    if (magic != kMagic) throw std::runtime_error("not an eigenmode file: " + path);
    get(in, version);
    if (version != kVersion) throw std::runtime_error("unsupported eigenmode file version");
    get(in, domain_hash);
    if (domain_hash != expected_domain_hash)
        throw std::runtime_error("eigenmode file was computed for a different domain");

    std::uint32_t nwin = 0;
    get(in, nwin);
    SpectrumCatalog catalog;
    catalog.windows.reserve(nwin);
    for (std::uint32_t w = 0; w < nwin; ++w) {
        double k_center = 0, basis_k = 0, d = 0;
        get(in, k_center);
        get(in, basis_k);
        get(in, d);
        std::uint32_t ncharge = 0;
        get(in, ncharge);
        std::vector<Vec2> charges(ncharge);
        for (auto& q : charges) {
            get(in, q.x);
            get(in, q.y);
        }
        ModeWindow window{k_center, ScalingBasis(basis_k, d, std::move(charges)), {}};
        std::uint32_t nmodes = 0;
        get(in, nmodes);
        window.modes.resize(nmodes);
        for (auto& m : window.modes) {
            get(in, m.k);
            get(in, m.omega);
            get(in, m.mu);
            get(in, m.rellich_norm);
            get(in, m.k_center);
            std::uint32_t nc = 0;
            get(in, nc);
            m.coeffs.resize(nc);
            in.read(reinterpret_cast<char*>(m.coeffs.data()),
                    static_cast<std::streamsize>(nc * sizeof(double)));
            if (!in) throw std::runtime_error("truncated eigenmode file");
        }
        catalog.windows.push_back(std::move(window));
    }
    return catalog;
}

}  // namespace bque
