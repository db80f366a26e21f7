#ifndef SPARSECOMP_SPARSECOMP_HPP
#define SPARSECOMP_SPARSECOMP_HPP

#include "error.hpp"
#include "rng.hpp"
#include "matcore.hpp"
#include "matrix_io.hpp"
#include "sparsify.hpp"
#include "bounds.hpp"
#include "completion.hpp"
#include "observation_io.hpp"
#include "mcverify.hpp"

#endif  // SPARSECOMP_SPARSECOMP_HPP
