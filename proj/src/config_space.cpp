#include "mbp/config_space.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mbp/util.hpp"

namespace mbp {

std::uint64_t enumeration_cap() {
    if (const char* env = std::getenv("MBP_ENUM_CAP")) {
        try {
            return static_cast<std::uint64_t>(std::stoull(env));
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("MBP_ENUM_CAP is not an integer: ") + env);
        }
    }
    return kDefaultEnumCap;
}

void ModelParams::validate() const {
    if (T < 1) throw std::invalid_argument("ModelParams: horizon T must be >= 1");
    if (marks.empty()) throw std::invalid_argument("ModelParams: mark set is empty");
    if (Q.size() != marks.size())
        throw std::invalid_argument("ModelParams: Q must have one entry per mark");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("ModelParams: jump probability lambda must lie in (0,1)");
    double s = 0.0;
    for (double q : Q) {
        if (!(q > 0.0)) throw std::invalid_argument("ModelParams: every Q(k) must be > 0");
        s += q;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("ModelParams: Q must sum to 1");
    for (std::size_t i = 0; i < marks.size(); ++i)
        for (std::size_t j = i + 1; j < marks.size(); ++j)
            if (marks[i] == marks[j])
                throw std::invalid_argument("ModelParams: marks must be pairwise distinct");
}

double ModelParams::step_prob(int digit) const {
    return digit == 0 ? 1.0 - lambda : lambda * Q[static_cast<std::size_t>(digit - 1)];
}

double ModelParams::mean_mark() const {
    double s = 0.0;
    for (std::size_t i = 0; i < marks.size(); ++i) s += marks[i] * Q[i];
    return s;
}

ModelParams ModelParams::from_text(const std::string& text) {
    ModelParams p;
    bool has_T = false, has_marks = false, has_lambda = false, has_Q = false;
    for (const auto& [key, value] : parse_key_values(text)) {
        if (key == "T") {
            p.T = std::stoi(value);
            has_T = true;
        } else if (key == "marks") {
            p.marks = parse_list(value);
            has_marks = true;
        } else if (key == "lambda") {
            p.lambda = std::stod(value);
            has_lambda = true;
        } else if (key == "Q") {
            p.Q = parse_list(value);
            has_Q = true;
        } else if (key == "seed") {
            p.seed = std::stoull(value);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    if (!has_T || !has_marks || !has_lambda || !has_Q)
        throw std::invalid_argument("config: keys T, marks, lambda and Q are required");
    p.validate();
    return p;
}

ModelParams ModelParams::from_file(const std::string& path) {
    return from_text(read_file(path));
}

Space::Space(ModelParams params, std::uint64_t cap) : params_(std::move(params)) {
    params_.validate();
    const auto r = static_cast<std::uint64_t>(radix());
    std::uint64_t n = 1;
    strides_.reserve(static_cast<std::size_t>(params_.T));
    for (int t = 1; t <= params_.T; ++t) {
        strides_.push_back(static_cast<std::size_t>(n));
        if (n > cap / r) {
            throw std::length_error("enumeration too large: (1+m)^T = " + std::to_string(r) + "^" +
                                    std::to_string(params_.T) + " = " +
                                    format_double(std::pow(static_cast<double>(r), params_.T)) +
                                    " configurations exceed cap " + std::to_string(cap));
        }
        n *= r;
    }
    if (n > cap)
        throw std::length_error("enumeration too large: " + std::to_string(n) + " configurations exceed cap " +
                                std::to_string(cap));
    size_ = static_cast<std::size_t>(n);

    // probabilities built axis by axis
    probs_.assign(size_, 1.0);
    for (int t = 1; t <= params_.T; ++t)
        for (std::size_t w = 0; w < size_; ++w) probs_[w] *= params_.step_prob(digit(w, t));
}

std::size_t Space::rank(const Configuration& w) const {
    if (static_cast<int>(w.digits.size()) != params_.T)
        throw std::invalid_argument("Configuration: length must equal T");
    std::size_t r = 0;
    for (int t = params_.T; t >= 1; --t) {
        const int d = w.digits[static_cast<std::size_t>(t - 1)];
        if (d < 0 || d > num_marks()) throw std::invalid_argument("Configuration: digit out of range");
        r = r * static_cast<std::size_t>(radix()) + static_cast<std::size_t>(d);
    }
    return r;
}

Configuration Space::unrank(std::size_t rank) const {
    Configuration w;
    w.digits.resize(static_cast<std::size_t>(params_.T));
    for (int t = 1; t <= params_.T; ++t) w.digits[static_cast<std::size_t>(t - 1)] = digit(rank, t);
    return w;
}

SpacePtr make_space(ModelParams params) { return std::make_shared<const Space>(std::move(params)); }

// ---------------------------------------------------------------------------
// PathFunctional

PathFunctional::PathFunctional(SpacePtr space, std::vector<double> table)
    : space_(std::move(space)), table_(std::move(table)) {
    if (!space_) throw std::invalid_argument("PathFunctional: null space");
    if (table_.size() != space_->size())
        throw std::invalid_argument("PathFunctional: table length must equal (1+m)^T");
}

PathFunctional::PathFunctional(std::shared_ptr<const ModelParams> params, Callable fn)
    : params_(std::move(params)), fn_(std::move(fn)) {
    if (!params_ || !fn_) throw std::invalid_argument("PathFunctional: null callable");
}

PathFunctional PathFunctional::tabulate(SpacePtr space, const Callable& fn) {
    std::vector<double> v(space->size());
    for (std::size_t w = 0; w < v.size(); ++w) v[w] = fn(space->unrank(w));
    return {std::move(space), std::move(v)};
}

PathFunctional PathFunctional::constant(SpacePtr space, double c) {
    const auto n = space->size();
    return {std::move(space), std::vector<double>(n, c)};
}

const Space& PathFunctional::space() const {
    if (!space_) throw std::logic_error("exact mode required");
    return *space_;
}

const ModelParams& PathFunctional::params() const { return space_ ? space_->params() : *params_; }

const std::vector<double>& PathFunctional::table() const& {
    if (!space_) throw std::logic_error("exact mode required");
    return table_;
}

std::vector<double> PathFunctional::table() && {
    if (!space_) throw std::logic_error("exact mode required");
    return std::move(table_);
}

double PathFunctional::operator()(const Configuration& w) const {
    return space_ ? table_[space_->rank(w)] : fn_(w);
}

namespace {
PathFunctional zip(const PathFunctional& a, const PathFunctional& b, double (*op)(double, double)) {
    if (a.table().size() != b.table().size())
        throw std::invalid_argument("PathFunctional: operands live on different spaces");
    const auto& x = a.table();
    const auto& y = b.table();
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = op(x[i], y[i]);
    return {a.space_ptr(), std::move(z)};
}
}  // namespace

PathFunctional PathFunctional::operator+(const PathFunctional& o) const {
    return zip(*this, o, [](double a, double b) { return a + b; });
}
PathFunctional PathFunctional::operator-(const PathFunctional& o) const {
    return zip(*this, o, [](double a, double b) { return a - b; });
}
PathFunctional PathFunctional::operator*(const PathFunctional& o) const {
    return zip(*this, o, [](double a, double b) { return a * b; });
}
PathFunctional PathFunctional::operator*(double c) const {
    auto v = table();
    for (auto& x : v) x *= c;
    return {space_, std::move(v)};
}
PathFunctional PathFunctional::operator+(double c) const {
    auto v = table();
    for (auto& x : v) x += c;
    return {space_, std::move(v)};
}

// ---------------------------------------------------------------------------

std::vector<Configuration> enumerate_configurations(const ModelParams& params) {
    Space s(params);
    std::vector<Configuration> out;
    out.reserve(s.size());
    for (std::size_t w = 0; w < s.size(); ++w) out.push_back(s.unrank(w));
    return out;
}

double config_probability(const ModelParams& params, const Configuration& w) {
    if (static_cast<int>(w.digits.size()) != params.T)
        throw std::invalid_argument("Configuration: length must equal T");
    double p = 1.0;
    for (int d : w.digits) {
        if (d < 0 || d > params.num_marks()) throw std::invalid_argument("Configuration: digit out of range");
        p *= params.step_prob(d);
    }
    return p;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

int sample_digit(const ModelParams& params, std::mt19937_64& rng) {
    // inverse-cdf on a 53-bit uniform; fixed so streams are portable
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double acc = params.step_prob(0);
    if (u < acc) return 0;
    for (int i = 1; i < params.num_marks(); ++i) {
        acc += params.step_prob(i);
        if (u < acc) return i;
    }
    return params.num_marks();
}

Configuration sample_path(const ModelParams& params, std::mt19937_64& rng) {
    params.validate();
    Configuration w;
    w.digits.resize(static_cast<std::size_t>(params.T));
    for (auto& d : w.digits) d = sample_digit(params, rng);
    return w;
}

CompoundValue compound_value(const ModelParams& params, const Configuration& w, int t) {
    if (t < 1 || t > params.T) throw std::out_of_range("compound_value: t out of range");
    CompoundValue v;
    for (int s = 1; s <= t; ++s) {
        const int d = w.digits[static_cast<std::size_t>(s - 1)];
        if (d != 0) {
            ++v.N;
            v.Y += params.marks[static_cast<std::size_t>(d - 1)];
        }
    }
    v.Ybar = v.Y - params.lambda * t * params.mean_mark();
    return v;
}

double expectation(const PathFunctional& F) {
    const auto& v = F.table();
    const auto& p = F.space().probabilities();
    double s = 0.0;
    for (std::size_t w = 0; w < v.size(); ++w) s += v[w] * p[w];
    return s;
}

std::vector<double> conditional_expectation(const Space& space, const std::vector<double>& values,
                                            const std::vector<double>& weights, int t) {
    if (t < 0 || t > space.horizon()) throw std::out_of_range("conditional_expectation: t out of range");
    const std::size_t n = space.size();
    const std::size_t atoms = t == 0 ? 1 : space.stride(t) * static_cast<std::size_t>(space.radix());
    std::vector<double> num(atoms, 0.0), den(atoms, 0.0);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t a = w % atoms;
        num[a] += weights[w] * values[w];
        den[a] += weights[w];
    }
    std::vector<double> out(n);
    for (std::size_t w = 0; w < n; ++w) out[w] = num[w % atoms] / den[w % atoms];
    return out;
}

PathFunctional conditional_expectation(const PathFunctional& F, int t) {
    return {F.space_ptr(), conditional_expectation(F.space(), F.table(), F.space().probabilities(), t)};
}

PathFunctional jump_count(SpacePtr space, int t) {
    const auto& p = space->params();
    return PathFunctional::tabulate(space, [&p, t](const Configuration& w) {
        return static_cast<double>(compound_value(p, w, t).N);
    });
}

PathFunctional compound_sum(SpacePtr space, int t) {
    const auto& p = space->params();
    return PathFunctional::tabulate(space, [&p, t](const Configuration& w) { return compound_value(p, w, t).Y; });
}

PathFunctional compensated_sum(SpacePtr space, int t) {
    const auto& p = space->params();
    return PathFunctional::tabulate(space,
                                    [&p, t](const Configuration& w) { return compound_value(p, w, t).Ybar; });
}

std::string to_csv(const PathFunctional& F) {
    std::ostringstream os;
    os << "rank,probability,value\n";
    const auto& v = F.table();
    for (std::size_t w = 0; w < v.size(); ++w)
        os << w << ',' << format_double(F.space().probability(w)) << ',' << format_double(v[w]) << '\n';
    return os.str();
}

}  // namespace mbp
