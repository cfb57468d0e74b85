#pragma once

#include <string>

#include "commwidth/factor.hpp"

namespace cw {

// Deterministic SVG rendering of a certificate: horizontal band lines at the
// m_k (tagged with data-level), marker curves and their images under the
// input, and iterated sample orbits.
std::string svg_plot(const FactorizationCertificate& cert);

}  // namespace cw
