#include "pf/experiment.hpp"

namespace pf {

namespace {

constexpr const char* kRecoveryCircle = R"(# circle recovery sweep: perimeter and elastica limits, discrepancy,
# first-variation convergence against the polyline oracle
[experiment]
name = recovery-circle
kind = recovery_sweep
eps = 0.08, 0.04, 0.02
cells_per_eps = 8

[shape]
type = circle
cx = 0
cy = 0
r = 0.5

[probes]
first_variation = 1
)";

constexpr const char* kSaddleGap = R"(# saddle blow-down: W stays at zero while B blows up, off-cross mass decays
[experiment]
name = saddle-gap
kind = saddle_blowdown
eps = 0.2, 0.1, 0.05, 0.025

[saddle]
R = 24
n = 769
tol = 1e-8
double_r = 1

[ball]
cx = 0.5
cy = 0.5
r = 0.2
)";

constexpr const char* kCusp2L = R"(# tube approximants of the cusp dumbbell: elastica converges to lobes + 2L
[experiment]
name = cusp-2L
kind = cusp_limit

[cusp]
L = 0.5
h_list = 4, 8, 16, 32
lobe_len = 0.6
coef = 3.2
samples = 512
)";

constexpr const char* kTangentCross = R"(# blow-up tangent probes: unique at a circle point, two directions at the cross
[experiment]
name = tangent-cross
kind = tangent_probe

[circle_probe]
eps = 0.02
cells_per_eps = 8
r = 0.5
x = 0.5
y = 0
scales = 0.2, 0.1, 0.05

[cross_probe]
eps = 0.025
cells_per_eps = 8
R = 24
n = 769
tol = 1e-8
scales = 0.8, 0.6, 0.4
)";

constexpr const char* kEnergyIdentities = R"(# pointwise algebra and tensor identities: the c0 constant, trace and
# bending inequalities on random smooth fields, level-set tensor relations
[experiment]
name = energy-identities
kind = energy_check
single_eps = 0.08

[shape]
type = circle
r = 0.5

[identities]
c0 = 1
random_fields = 100
tensor_relations = 1
)";

} // namespace

std::vector<std::string> preset_names() {
    return {"recovery-circle", "saddle-gap", "cusp-2L", "tangent-cross", "energy-identities"};
}

std::string preset_text(const std::string& name) {
    if (name == "recovery-circle") return kRecoveryCircle;
    if (name == "saddle-gap") return kSaddleGap;
    if (name == "cusp-2L") return kCusp2L;
    if (name == "tangent-cross") return kTangentCross;
    if (name == "energy-identities") return kEnergyIdentities;
    throw SpecError("unknown preset '" + name + "'");
}

} // namespace pf
