#pragma once

namespace contro {

/// Selects the OpenMP kernel or the serial reference path. Both produce
/// identical results; the serial path exists for testing and benchmarking.
enum class Exec { serial, parallel };

}  // namespace contro
