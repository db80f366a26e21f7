// Sparsifies a rank-1 matrix at a few budgets and prints the relative error
// of the top singular value next to eps_1 and eps_1^2.

#include <cstdio>
#include <vector>

#include <sparsecomp/sparsecomp.hpp>

int main() {
    using namespace sparsecomp;
    const DenseMatrix a = make_low_rank(128, 128, {1.0}, 7);
    const auto f = svd(a);
    const int trials = 200;
    std::printf("%8s %12s %12s %12s\n", "m", "median err", "eps_1", "eps_1^2");
    for (double m : {1024.0, 2048.0, 4096.0, 8192.0}) {
        std::vector<double> err;
        for (int t = 0; t < trials; ++t) {
            const auto out = sparsify_bernoulli(a, m, derive_seed(42, static_cast<std::uint64_t>(m), t),
                                                ClampPolicy::clamp);
            err.push_back(std::abs(detail::singular_values(out.result.eigen())(0) / f.sigma(0) - 1.0));
        }
        const auto p = sparsify_predictors(a, f, m);
        std::printf("%8.0f %12.3e %12.3e %12.3e\n", m, median(err), p.eps.front(), p.eps1Squared);
    }
}
