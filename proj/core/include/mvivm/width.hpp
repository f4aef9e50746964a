#ifndef MVIVM_WIDTH_HPP
#define MVIVM_WIDTH_HPP

#include <memory>
#include <string>
#include <vector>

#include "mvivm/query.hpp"
#include "mvivm/rational.hpp"

namespace mvivm {

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FractionalEdgeCover {
    // One weight per atom of the covered query, in atom order.
    std::vector<Rational> weights;
    Rational objective;
};

// Exact fractional edge cover number with a witnessing cover.
// Budget: at most 16 variables and 12 atoms.
std::pair<Rational, FractionalEdgeCover> rho_star(const Query& q);

struct GyoStep {
    enum Kind { EliminateVariable, RemoveAtom } kind;
    std::string what;
};

struct GyoResult {
    bool acyclic;
    std::vector<GyoStep> trace;
};

GyoResult gyo_reduce(const Query& q);
bool is_acyclic(const Query& q);
bool is_hierarchical(const Query& q);

struct VariableOrder {
    std::vector<Variable> order;
    // Bag induced at each elimination step (the variables co-occurring with
    // the eliminated one at that point).
    std::vector<std::vector<Variable>> bags;
};

struct TreeDecomposition {
    struct Node {
        std::vector<Variable> bag;
        FractionalEdgeCover cover;  // cover of restrict(q, bag)
        Rational rho;
        int parent = -1;
        std::vector<int> children;
    };
    std::vector<Node> nodes;
    int root = 0;
    Rational width;
    VariableOrder elim;

    void reroot(int new_root);
    int find_bag_containing(const std::vector<Variable>& vars) const;
};

// Minimum fractional hypertree width over variable elimination orders, with
// the tree decomposition induced by the lexicographically smallest optimal
// order (subset bags merged away). Same budget as rho_star.
std::pair<Rational, TreeDecomposition> fhtw(const Query& q);

struct TimeExtension {
    Query base;
    Query extended;
    Variable interval_var;
};

TimeExtension time_extension(const Query& q);

struct MultivariateComponent {
    std::vector<std::size_t> perm;  // 0-based atom indices, sigma_1..sigma_k
    Query query;
    TreeDecomposition td;  // every bag Z-prefix-closed; rooted at enum_root
    int enum_root;         // bag containing all of Z1..Zk
    std::string perm_name() const;
};

struct MultivariateExtension {
    Query base;
    std::vector<Variable> zvars;
    std::vector<MultivariateComponent> components;  // permutation-lex order
    Rational width() const;
};

// All k! components with Z-prefix-closed optimal tree decompositions.
// Budget: k <= 5 atoms and |vars| + k <= 16.
MultivariateExtension multivariate_extension(const Query& q);

// Process-wide memo of the above; engines construct per stream, the
// decompositions only depend on the query.
std::shared_ptr<const MultivariateExtension> multivariate_extension_cached(const Query& q);

Rational w_hat(const Query& q);

}  // namespace mvivm

#endif
