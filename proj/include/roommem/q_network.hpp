#pragma once

#include <array>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "roommem/memory.hpp"
#include "roommem/nn.hpp"

namespace roommem {

// Token ids for every entity the room can emit. Humans, objects and
// locations live in separate namespaces and share one id range in that
// order. The relation has no token: its embedding slot is always zero.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> humans, std::vector<std::string> objects,
               std::vector<std::string> locations);

    int size() const { return static_cast<int>(humans_.size() + objects_.size() + locations_.size()); }
    int human(std::string_view name) const;
    int object(std::string_view name) const;
    int location(std::string_view name) const;

    const std::vector<std::string>& humans() const { return humans_; }
    const std::vector<std::string>& objects() const { return objects_; }
    const std::vector<std::string>& locations() const { return locations_; }

    // "human|object|location<TAB>name" per line.
    std::string to_text() const;
    static Vocabulary from_text(const std::string& text);

    bool operator==(const Vocabulary& other) const {
        return humans_ == other.humans_ && objects_ == other.objects_ &&
               locations_ == other.locations_;
    }

private:
    static int find(const std::unordered_map<std::string, int>& map, std::string_view name,
                    const char* what);
    std::vector<std::string> humans_, objects_, locations_;
    std::unordered_map<std::string, int> human_ids_, object_ids_, location_ids_;
};

// One memory entry as token ids. `owner` is -1 for semantic entries.
struct EncodedEntry {
    int object = -1;
    int owner = -1;
    int tail = -1;

    bool operator==(const EncodedEntry&) const = default;
};
using EncodedMemory = std::vector<EncodedEntry>;

// Short-term, episodic, semantic, each sorted ascending by value.
struct EncodedState {
    std::array<EncodedMemory, 3> memories;

    bool operator==(const EncodedState&) const = default;
};

// Sorts ascending by timestamp/strength (stable, so equal values keep
// insertion order) and tokenizes.
EncodedMemory encode_memory(const MemorySystem& memory, const Vocabulary& vocab);
EncodedState encode_state(const MemoryState& state, const Vocabulary& vocab);

// Knowledge-graph-embedding view of a memory: one 3*dim vector per entry,
// laid out head || relation || tail with a zero relation slot. Owned heads
// embed as emb(human) + emb(object).
std::vector<nn::Vector> kge_encode(const MemorySystem& memory, const Vocabulary& vocab,
                                   const nn::Embedding& table);

struct NetworkDims {
    int embedding_dim = 32;
    int hidden_dim = 64;
    int lstm_layers = 2;

    bool operator==(const NetworkDims&) const = default;
};

// Q(s, .) for the three memory actions: each memory runs through its own
// LSTM and a Linear+ReLU branch; the three branch outputs are concatenated
// and mapped through Linear+ReLU+Linear to three values.
class QNetwork {
public:
    struct BranchCache {
        std::vector<int> lengths;
        int steps = 0;
        nn::Lstm::Cache lstm;
        nn::Matrix last_hidden;  // H x B
        nn::Matrix branch_pre;   // H x B, before ReLU
    };
    struct Cache {
        int batch = 0;
        std::vector<const EncodedState*> states;
        std::array<BranchCache, 3> branches;
        nn::Matrix joined;     // 3H x B
        nn::Matrix head_pre;   // H x B
        nn::Matrix head_act;   // H x B
    };

    QNetwork() = default;
    QNetwork(int vocab_size, const NetworkDims& dims, std::uint64_t seed);

    const NetworkDims& dims() const { return dims_; }
    int vocab_size() const { return embedding_.vocab(); }

    // 3 x B Q-values. The cache keeps pointers into `batch`, which must stay
    // alive until backward() returns.
    nn::Matrix forward(std::span<const EncodedState> batch, Cache* cache = nullptr) const;
    nn::Vector q_values(const EncodedState& state) const;
    // Accumulates gradients of a loss whose gradient w.r.t. the output is dq.
    void backward(const Cache& cache, const nn::Matrix& dq);

    nn::ParamRefs parameters();
    nn::ConstParamRefs parameters() const;
    std::size_t parameter_count() const { return nn::count_parameters(parameters()); }
    void zero_grad();

    nn::Embedding& embedding() { return embedding_; }
    const nn::Embedding& embedding() const { return embedding_; }

private:
    nn::Matrix build_inputs(std::span<const EncodedState> batch, int branch,
                            std::vector<int>& lengths, int& steps) const;
    void scatter_input_grad(const Cache& cache, int branch, const nn::Matrix& dx);

    NetworkDims dims_;
    nn::Embedding embedding_;
    std::array<nn::Lstm, 3> lstms_;
    std::array<nn::Linear, 3> branch_mlps_;
    nn::Linear head_hidden_;
    nn::Linear head_out_;
};

// argmax with ties to the lowest index; throws on non-finite values.
Action greedy_action(std::span<const Real> q_values);
inline Action greedy_action(const nn::Vector& q) {
    return greedy_action(std::span<const Real>(q.data(), static_cast<std::size_t>(q.size())));
}

// Checkpoint = network parameters + dims + vocabulary.
std::string save_q_network(const QNetwork& net, const Vocabulary& vocab);
struct LoadedNetwork {
    QNetwork network;
    Vocabulary vocab;
};
LoadedNetwork load_q_network(const std::string& blob);

}  // namespace roommem
