#pragma once

#include "farkas/graph.hpp"
#include "farkas/model.hpp"
#include "farkas/query.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace farkas {

// How the visited-set components are updated along a transition s -a-> s'.
//   Successor: u' = u ∪ {i | s' ∈ T_i}, v' = v ∪ {j | s' ∉ G_j}; the initial state is seeded from s_in.
//   Source:    u' = u ∪ {i | s ∈ T_i},  v' = v ∪ {j | s ∉ G_j}; the initial state is (s_in, ∅, ∅).
enum class UpdateRule { Successor, Source };

struct ProductOptions {
    UpdateRule rule = UpdateRule::Successor;
    // Maximal number of product states; 0 selects 10·|S|·2^(k+l).
    std::size_t cap = 0;
};

struct Product {
    Mdp mdp;
    std::vector<StateId> base;
    std::vector<std::uint64_t> u;  // bit i: reach target i visited
    std::vector<std::uint64_t> v;  // bit j: safe set j left
    std::size_t k = 0;
    std::size_t l = 0;
};

std::string product_state_name(const std::string& base, std::uint64_t u, std::size_t k, std::uint64_t v, std::size_t l);

Product build_product(const Mdp& mdp, const std::vector<std::vector<bool>>& reachTargets,
                      const std::vector<std::vector<bool>>& safeSets, const ProductOptions& options = {});

struct MecClasses {
    std::vector<std::vector<std::size_t>> A;  // per reach objective: MEC indices whose u contains i
    std::vector<std::vector<std::size_t>> B;  // per invariant objective: MEC indices whose v lacks j
};

MecClasses classify_mecs(const Product& product, const std::vector<Mec>& mecs);

struct ReducedQuery {
    Product product;
    Quotient quotient;
    ReachForm form;  // quotient in reachability form, F = all bottom states, goals follow the query order
    Query query;     // reach predicates on labels G1.. of form.mdp
    MecClasses classes;
    std::vector<std::size_t> reachIndex;      // predicate -> index among reach objectives, or npos
    std::vector<std::size_t> invariantIndex;  // predicate -> index among invariant objectives, or npos
};

// Product, quotient and MEC classification for a lower-bounded reach/invariant query.
ReducedQuery reduce_query(const Mdp& mdp, const Query& query, const ProductOptions& options = {});

}  // namespace farkas
