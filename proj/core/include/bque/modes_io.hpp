#pragma once

#include <cstdint>
#include <string>

#include "bque/solver.hpp"

namespace bque {

/// Binary eigenmode catalog: a sequence of window sections, each carrying
/// its self-describing basis (center wavenumber, offset distance, charge
/// coordinates) followed by the window's mode records
/// (k, omega, rellich_norm, coefficients as little-endian float64).
/// Round trips are bit-identical; a domain-hash mismatch on load refuses
/// the file.
void save_catalog(const std::string& path, std::uint64_t domain_hash,
                  const SpectrumCatalog& catalog);

SpectrumCatalog load_catalog(const std::string& path, std::uint64_t expected_domain_hash);

}  // namespace bque
