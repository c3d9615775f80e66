#pragma once

#include "mbp/basis.hpp"
#include "mbp/config_space.hpp"

namespace mbp::testing {

// T=3, marks {1,-1}, lambda 0.5, uniform Q.
inline ModelParams cti() {
    ModelParams p;
    p.T = 3;
    p.marks = {1.0, -1.0};
    p.lambda = 0.5;
    p.Q = {0.5, 0.5};
    p.seed = 7;
    return p;
}

// T=5, marks {1,2,3}, lambda 0.3.
inline ModelParams three_marks() {
    ModelParams p;
    p.T = 5;
    p.marks = {1.0, 2.0, 3.0};
    p.lambda = 0.3;
    p.Q = {0.5, 0.3, 0.2};
    p.seed = 11;
    return p;
}

// prod_{p in s} dR_p as a table.
inline PathFunctional dr_product(const SpacePtr& space, const OrthogonalBasis& basis, const Support& s) {
    return PathFunctional::tabulate(space, [&](const Configuration& w) {
        double v = 1.0;
        for (const Point& p : s) v *= delta_r(basis, space->params(), w, p);
        return v;
    });
}

}  // namespace mbp::testing
