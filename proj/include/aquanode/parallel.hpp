// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace aquanode {

// Data-parallel kernels come in two flavors: an OpenMP one (default) and a
// serial reference kept for testing. Parallel loops split only across
// independent output elements, so the two produce bitwise-identical results.
enum class Exec { serial, parallel };

}  // namespace aquanode
