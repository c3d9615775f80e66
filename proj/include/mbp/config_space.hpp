#pragma once
/**
 * @file config_space.hpp
 * @brief Finite sample space of a marked binomial process on T steps.
 *
 * A configuration stores one digit per step: 0 = no jump, i = jump with mark k^i.
 * Configurations are ranked in mixed radix (1+m) with t = 1 least significant.
 */

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace mbp {

/// Default cap on the number of enumerated configurations.
inline constexpr std::uint64_t kDefaultEnumCap = 10'000'000ULL;

/// Enumeration cap, overridden by the MBP_ENUM_CAP environment variable when set.
std::uint64_t enumeration_cap();

/// Parameters of the marked binomial law.
struct ModelParams {
    int T = 1;                   ///< horizon
    std::vector<double> marks;   ///< k^1..k^m, order fixes the Gram-Schmidt order
    double lambda = 0.5;         ///< jump probability per step
    std::vector<double> Q;       ///< mark law
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the violated invariant.
    void validate() const;
    int num_marks() const { return static_cast<int>(marks.size()); }
    /// Per-step probability of a digit: 1-lambda for 0, lambda*Q(k^i) for i.
    double step_prob(int digit) const;
    /// Intensity nu({(t,k^i)}) = lambda*Q(k^i), mark index i is 0-based.
    double intensity(int mark) const { return lambda * Q[static_cast<std::size_t>(mark)]; }
    /// Sum_k k Q(k).
    double mean_mark() const;

    /// Parses a flat key=value file (keys T, marks, lambda, Q, seed; '#' comments).
    static ModelParams from_file(const std::string& path);
    /// Parses key=value text.
    static ModelParams from_text(const std::string& text);
};

/// One realized path.
struct Configuration {
    std::vector<int> digits;  ///< digits[t-1] for t = 1..T
    bool operator==(const Configuration&) const = default;
};

/// Enumerated configuration space with cached probabilities.
class Space {
public:
    /// Throws std::length_error("enumeration too large: ...") beyond the cap.
    explicit Space(ModelParams params, std::uint64_t cap = enumeration_cap());

    const ModelParams& params() const { return params_; }
    int horizon() const { return params_.T; }
    int num_marks() const { return params_.num_marks(); }
    int radix() const { return params_.num_marks() + 1; }
    std::size_t size() const { return size_; }

    std::size_t stride(int t) const { return strides_[static_cast<std::size_t>(t - 1)]; }
    int digit(std::size_t rank, int t) const {
        return static_cast<int>((rank / stride(t)) % static_cast<std::size_t>(radix()));
    }
    /// Rank of the configuration with digit t replaced by d.
    std::size_t with_digit(std::size_t rank, int t, int d) const {
        return rank - static_cast<std::size_t>(digit(rank, t)) * stride(t) +
               static_cast<std::size_t>(d) * stride(t);
    }

    std::size_t rank(const Configuration& w) const;
    Configuration unrank(std::size_t rank) const;
    double probability(std::size_t rank) const { return probs_[rank]; }
    const std::vector<double>& probabilities() const { return probs_; }

    /// Index of the F_t atom containing rank (digits 1..t kept, others zeroed).
    std::size_t atom(std::size_t rank, int t) const {
        return t <= 0 ? 0 : rank % (stride(t) * static_cast<std::size_t>(radix()));
    }

private:
    ModelParams params_;
    std::size_t size_ = 0;
    std::vector<std::size_t> strides_;
    std::vector<double> probs_;
};

using SpacePtr = std::shared_ptr<const Space>;
SpacePtr make_space(ModelParams params);

/// Real functional of configurations: dense table over ranks, or callable.
class PathFunctional {
public:
    using Callable = std::function<double(const Configuration&)>;

    PathFunctional(SpacePtr space, std::vector<double> table);
    PathFunctional(std::shared_ptr<const ModelParams> params, Callable fn);

    /// Tabulates fn over the whole space.
    static PathFunctional tabulate(SpacePtr space, const Callable& fn);
    static PathFunctional constant(SpacePtr space, double c);

    bool is_exact() const { return space_ != nullptr; }
    const Space& space() const;
    const SpacePtr& space_ptr() const { return space_; }
    const ModelParams& params() const;
    /// Throws std::logic_error("exact mode required") in callable mode.
    const std::vector<double>& table() const&;
    /// Moves the table out of a temporary so range-for over a returned functional stays valid.
    std::vector<double> table() &&;
    double at(std::size_t rank) const { return table()[rank]; }
    double operator()(const Configuration& w) const;

    PathFunctional operator+(const PathFunctional& o) const;
    PathFunctional operator-(const PathFunctional& o) const;
    PathFunctional operator*(const PathFunctional& o) const;
    PathFunctional operator*(double c) const;
    PathFunctional operator+(double c) const;

private:
    SpacePtr space_;
    std::shared_ptr<const ModelParams> params_;
    std::vector<double> table_;
    Callable fn_;
};

std::vector<Configuration> enumerate_configurations(const ModelParams& params);
double config_probability(const ModelParams& params, const Configuration& w);

/// Deterministic stream: the engine is seeded from (seed, stream index).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);
Configuration sample_path(const ModelParams& params, std::mt19937_64& rng);
int sample_digit(const ModelParams& params, std::mt19937_64& rng);

struct CompoundValue {
    int N = 0;         ///< number of jumps up to t
    double Y = 0.0;    ///< sum of marks up to t
    double Ybar = 0.0; ///< Y_t - lambda t sum_k k Q(k)
};
CompoundValue compound_value(const ModelParams& params, const Configuration& w, int t);

double expectation(const PathFunctional& F);
/// E[F | F_t]; constant on atoms sharing digits 1..t.
PathFunctional conditional_expectation(const PathFunctional& F, int t);
/// E[F|F_t] on the whole table via per-atom weighted sums.
std::vector<double> conditional_expectation(const Space& space, const std::vector<double>& values,
                                            const std::vector<double>& weights, int t);

// Common functionals.
PathFunctional jump_count(SpacePtr space, int t);      ///< N_t
PathFunctional compound_sum(SpacePtr space, int t);    ///< Y_t
PathFunctional compensated_sum(SpacePtr space, int t); ///< Ybar_t

/// CSV rows "rank,probability,value".
std::string to_csv(const PathFunctional& F);

}  // namespace mbp
