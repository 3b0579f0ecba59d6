#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "zks/zkp/field.hpp"

namespace zks::zkp {

using Var = std::uint32_t;

/// Slot 0 of every witness holds the constant 1.
inline constexpr Var kOneVar = 0;

struct Term {
    Var var;
    Fp coeff;
};

/// Sparse linear combination over witness slots. Terms are merged and sorted
/// by variable when a constraint is recorded.
class LinearCombination {
public:
    LinearCombination() = default;
    // NOLINTNEXTLINE(google-explicit-constructor)
    LinearCombination(Var v) { terms_.push_back({v, Fp::one()}); }
    static LinearCombination constant(Fp c);
    static LinearCombination constant_signed(std::int64_t c) { return constant(Fp::from_signed(c)); }

    LinearCombination& add(Var v, Fp coeff);
    LinearCombination& add_constant(Fp c) { return add(kOneVar, c); }
    LinearCombination& add(const LinearCombination& other, Fp scale = Fp::one());

    LinearCombination operator+(const LinearCombination& o) const;
    LinearCombination operator-(const LinearCombination& o) const;
    LinearCombination operator*(Fp s) const;

    Fp evaluate(std::span<const Fp> witness) const;
    void normalize();

    const std::vector<Term>& terms() const { return terms_; }

private:
    std::vector<Term> terms_;
};

enum class Family : std::uint8_t { c1 = 1, c2 = 2, c3 = 3, c4 = 4 };

std::string_view family_name(Family f);

/// <a,w> * <b,w> = <c,w>
struct Constraint {
    LinearCombination a, b, c;
    Family family;
    // Public-input bindings are checked on every verification, never sampled.
    bool binding = false;

    bool satisfied(std::span<const Fp> witness) const;
};

struct FamilyCounts {
    std::array<std::size_t, 5> by_family{};  // indexed by Family value
    std::size_t total() const { return by_family[1] + by_family[2] + by_family[3] + by_family[4]; }
    std::size_t operator[](Family f) const { return by_family[static_cast<std::size_t>(f)]; }
};

struct ConstraintSystem {
    std::size_t num_vars = 1;
    std::vector<Var> public_slots;
    std::vector<Constraint> constraints;

    std::size_t size() const { return constraints.size(); }
    // Index of the first unsatisfied constraint, or nullopt.
    std::optional<std::size_t> first_unsatisfied(std::span<const Fp> witness) const;
    bool is_satisfied(std::span<const Fp> witness) const { return !first_unsatisfied(witness); }
    FamilyCounts counts() const;
    std::vector<std::size_t> binding_indices() const;
    // Sorted distinct witness slots referenced by constraint i.
    std::vector<Var> slots_of(std::size_t i) const;
};

/// Allocates witness slots and records constraints in one pass, so the
/// constraint structure and the witness assignment come from the same code.
/// With record = false only the witness is produced.
class CircuitBuilder {
public:
    explicit CircuitBuilder(bool record);

    Var alloc(Fp value);
    Var alloc_public(Fp value);
    Fp value(Var v) const { return witness_[v]; }
    Fp eval(const LinearCombination& lc) const { return lc.evaluate(witness_); }

    void enforce(LinearCombination a, LinearCombination b, LinearCombination c, Family family,
                 bool binding = false);
    // lc == target
    void enforce_equal(const LinearCombination& lc, const LinearCombination& target, Family family,
                       bool binding = false);
    // Allocates v = a*b and constrains it.
    Var mul(const LinearCombination& a, const LinearCombination& b, Family family);
    Var boolean(bool bit, Family family);
    // Proves 0 <= value(lc) < 2^bits via bit decomposition; returns the bits.
    std::vector<Var> range_check(const LinearCombination& lc, unsigned bits, Family family);

    bool recording() const { return record_; }
    std::size_t num_constraints() const { return count_; }
    FamilyCounts family_counts() const { return counts_; }

    ConstraintSystem take_system();
    std::vector<Fp> take_witness() { return std::move(witness_); }
    const std::vector<Fp>& witness() const { return witness_; }

private:
    bool record_;
    ConstraintSystem cs_;
    std::vector<Fp> witness_;
    std::size_t count_ = 0;
    FamilyCounts counts_;
};

}  // namespace zks::zkp
