#include "roommem/q_network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace roommem {

using nn::Matrix;
using nn::Vector;

namespace {

constexpr int kShortTerm = 0;
constexpr int kSemantic = 2;

void index_names(const std::vector<std::string>& names, int offset,
                 std::unordered_map<std::string, int>& out, const char* what) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!out.emplace(names[i], offset + static_cast<int>(i)).second) {
            throw Error(std::string("vocabulary: duplicate ") + what + " '" + names[i] + "'");
        }
    }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> humans, std::vector<std::string> objects,
                       std::vector<std::string> locations)
    : humans_(std::move(humans)), objects_(std::move(objects)), locations_(std::move(locations)) {
    index_names(humans_, 0, human_ids_, "human");
    index_names(objects_, static_cast<int>(humans_.size()), object_ids_, "object");
    index_names(locations_, static_cast<int>(humans_.size() + objects_.size()), location_ids_,
                "location");
}

int Vocabulary::find(const std::unordered_map<std::string, int>& map, std::string_view name,
                     const char* what) {
    auto it = map.find(std::string(name));
    if (it == map.end()) {
        throw Error(std::string("untokenizable ") + what + " '" + std::string(name) + "'");
    }
    return it->second;
}

int Vocabulary::human(std::string_view name) const { return find(human_ids_, name, "human"); }
int Vocabulary::object(std::string_view name) const { return find(object_ids_, name, "object"); }
int Vocabulary::location(std::string_view name) const {
    return find(location_ids_, name, "location");
}

std::string Vocabulary::to_text() const {
    std::ostringstream out;
    for (const auto& h : humans_) out << "human\t" << h << '\n';
    for (const auto& o : objects_) out << "object\t" << o << '\n';
    for (const auto& l : locations_) out << "location\t" << l << '\n';
    return out.str();
}

Vocabulary Vocabulary::from_text(const std::string& text) {
    std::vector<std::string> humans, objects, locations;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("vocabulary: malformed line '" + line + "'");
        const auto kind = line.substr(0, tab);
        auto name = line.substr(tab + 1);
        if (kind == "human") humans.push_back(std::move(name));
        else if (kind == "object") objects.push_back(std::move(name));
        else if (kind == "location") locations.push_back(std::move(name));
        else throw Error("vocabulary: unknown kind '" + kind + "'");
    }
    return Vocabulary(std::move(humans), std::move(objects), std::move(locations));
}

EncodedMemory encode_memory(const MemorySystem& memory, const Vocabulary& vocab) {
    const auto& entries = memory.entries();
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return entries[a].value < entries[b].value;
    });
    EncodedMemory out;
    out.reserve(entries.size());
    for (const auto i : order) {
        const auto& q = entries[i];
        EncodedEntry e;
        if (memory.kind() == MemoryKind::semantic) {
            e.object = vocab.object(q.head);
        } else {
            const auto owned = strip_owner(q.head);
            e.owner = vocab.human(owned.human);
            e.object = vocab.object(owned.object);
        }
        e.tail = vocab.location(q.tail);
        out.push_back(e);
    }
    return out;
}

EncodedState encode_state(const MemoryState& state, const Vocabulary& vocab) {
    return {{encode_memory(state.short_term, vocab), encode_memory(state.episodic, vocab),
             encode_memory(state.semantic, vocab)}};
}

std::vector<Vector> kge_encode(const MemorySystem& memory, const Vocabulary& vocab,
                               const nn::Embedding& table) {
    const int d = table.dim();
    std::vector<Vector> out;
    for (const auto& e : encode_memory(memory, vocab)) {
        Vector v = Vector::Zero(3 * d);
        v.head(d) = table.lookup(e.object);
        if (e.owner >= 0) v.head(d) += table.lookup(e.owner);
        v.tail(d) = table.lookup(e.tail);
        out.push_back(std::move(v));
    }
    return out;
}

QNetwork::QNetwork(int vocab_size, const NetworkDims& dims, std::uint64_t seed) : dims_(dims) {
    if (dims.embedding_dim < 1 || dims.hidden_dim < 1 || dims.lstm_layers < 1) {
        throw ConfigError("network dimensions must be positive");
    }
    const int d = dims.embedding_dim, h = dims.hidden_dim;
    static constexpr std::array<const char*, 3> kBranch{"short_term", "episodic", "semantic"};
    embedding_ = nn::Embedding("embedding", vocab_size, d);
    for (std::size_t k = 0; k < 3; ++k) {
        lstms_[k] = nn::Lstm(std::string("lstm.") + kBranch[k], 3 * d, h, dims.lstm_layers);
        branch_mlps_[k] = nn::Linear(std::string("mlp.") + kBranch[k], h, h);
    }
    head_hidden_ = nn::Linear("mlp.all.0", 3 * h, h);
    head_out_ = nn::Linear("mlp.all.1", h, kNumActions);

    Rng rng(mix_seed(seed, 0x9e7));
    embedding_.table().init_uniform(rng, Real(1));
    for (auto& l : lstms_) l.init(rng);
    for (auto& m : branch_mlps_) m.init(rng);
    head_hidden_.init(rng);
    head_out_.init(rng);
}

nn::ParamRefs QNetwork::parameters() {
    nn::ParamRefs out{&embedding_.table()};
    for (auto& l : lstms_) {
        for (auto* p : l.parameters()) out.push_back(p);
    }
    for (auto& m : branch_mlps_) {
        out.push_back(&m.weight());
        out.push_back(&m.bias());
    }
    for (auto* m : {&head_hidden_, &head_out_}) {
        out.push_back(&m->weight());
        out.push_back(&m->bias());
    }
    return out;
}

nn::ConstParamRefs QNetwork::parameters() const {
    auto refs = const_cast<QNetwork*>(this)->parameters();
    return {refs.begin(), refs.end()};
}

void QNetwork::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

Matrix QNetwork::build_inputs(std::span<const EncodedState> batch, int branch,
                              std::vector<int>& lengths, int& steps) const {
    const auto b_count = static_cast<Eigen::Index>(batch.size());
    const int d = dims_.embedding_dim;
    lengths.resize(batch.size());
    steps = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        lengths[b] = static_cast<int>(batch[b].memories[static_cast<std::size_t>(branch)].size());
        steps = std::max(steps, lengths[b]);
    }
    Matrix x = Matrix::Zero(3 * d, steps * b_count);
    const auto& table = embedding_.table().value;
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const auto& seq = batch[static_cast<std::size_t>(b)].memories[static_cast<std::size_t>(branch)];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const auto& e = seq[t];
            auto col = x.col(static_cast<Eigen::Index>(t) * b_count + b);
            if (e.object < 0 || e.object >= embedding_.vocab() || e.tail < 0 ||
                e.tail >= embedding_.vocab() || e.owner >= embedding_.vocab()) {
                throw Error("q-network: token id out of range");
            }
            col.head(d) = table.col(e.object);
            if (e.owner >= 0) col.head(d) += table.col(e.owner);
            col.tail(d) = table.col(e.tail);
        }
    }
    return x;
}

Matrix QNetwork::forward(std::span<const EncodedState> batch, Cache* cache) const {
    if (batch.empty()) throw Error("q-network: empty batch");
    const auto b_count = static_cast<Eigen::Index>(batch.size());
    const int h = dims_.hidden_dim;
    Matrix joined(3 * h, b_count);
    for (int k = 0; k < 3; ++k) {
        BranchCache local;
        BranchCache& bc = cache ? cache->branches[static_cast<std::size_t>(k)] : local;
        const Matrix x = build_inputs(batch, k, bc.lengths, bc.steps);
        bc.last_hidden = lstms_[static_cast<std::size_t>(k)].forward(x, bc.lengths,
                                                                     cache ? &bc.lstm : nullptr);
        bc.branch_pre = branch_mlps_[static_cast<std::size_t>(k)].forward(bc.last_hidden);
        joined.middleRows(k * h, h) = nn::relu(bc.branch_pre);
    }
    Matrix head_pre = head_hidden_.forward(joined);
    Matrix head_act = nn::relu(head_pre);
    Matrix q = head_out_.forward(head_act);
    if (cache) {
        cache->batch = static_cast<int>(b_count);
        cache->states.clear();
        for (const auto& s : batch) cache->states.push_back(&s);
        cache->joined = std::move(joined);
        cache->head_pre = std::move(head_pre);
        cache->head_act = std::move(head_act);
    }
    return q;
}

Vector QNetwork::q_values(const EncodedState& state) const {
    return forward(std::span<const EncodedState>(&state, 1)).col(0);
}

void QNetwork::scatter_input_grad(const Cache& cache, int branch, const Matrix& dx) {
    const int d = dims_.embedding_dim;
    const auto b_count = static_cast<Eigen::Index>(cache.batch);
    auto& grad = embedding_.table().grad;
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const auto& seq = cache.states[static_cast<std::size_t>(b)]->memories[static_cast<std::size_t>(branch)];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const auto& e = seq[t];
            const auto col = dx.col(static_cast<Eigen::Index>(t) * b_count + b);
            grad.col(e.object) += col.head(d);
            if (e.owner >= 0) grad.col(e.owner) += col.head(d);
            grad.col(e.tail) += col.tail(d);
        }
    }
}

void QNetwork::backward(const Cache& cache, const Matrix& dq) {
    if (dq.rows() != kNumActions || dq.cols() != cache.batch) {
        throw Error("q-network backward: gradient shape mismatch");
    }
    const int h = dims_.hidden_dim;
    const Matrix d_head_act = head_out_.backward(cache.head_act, dq);
    const Matrix d_head_pre = nn::relu_backward(cache.head_pre, d_head_act);
    const Matrix d_joined = head_hidden_.backward(cache.joined, d_head_pre);
    for (int k = 0; k < 3; ++k) {
        const auto& bc = cache.branches[static_cast<std::size_t>(k)];
        const Matrix d_pre = nn::relu_backward(bc.branch_pre, d_joined.middleRows(k * h, h));
        const Matrix d_hidden =
            branch_mlps_[static_cast<std::size_t>(k)].backward(bc.last_hidden, d_pre);
        if (bc.steps == 0) continue;
        const Matrix dx = lstms_[static_cast<std::size_t>(k)].backward(bc.lstm, d_hidden);
        scatter_input_grad(cache, k, dx);
    }
}

Action greedy_action(std::span<const Real> q_values) {
    if (q_values.size() != static_cast<std::size_t>(kNumActions)) {
        throw Error("greedy_action: expected 3 Q-values");
    }
    std::size_t best = 0;
    for (std::size_t i = 0; i < q_values.size(); ++i) {
        if (!std::isfinite(q_values[i])) throw Error("greedy_action: non-finite Q-value");
        if (q_values[i] > q_values[best]) best = i;
    }
    return static_cast<Action>(best);
}

std::string save_q_network(const QNetwork& net, const Vocabulary& vocab) {
    if (vocab.size() != net.vocab_size()) throw Error("save: vocabulary/network size mismatch");
    std::ostringstream extra;
    extra << "dims\t" << net.dims().embedding_dim << '\t' << net.dims().hidden_dim << '\t'
          << net.dims().lstm_layers << '\n'
          << vocab.to_text();
    return nn::encode_checkpoint(net.parameters(), extra.str());
}

LoadedNetwork load_q_network(const std::string& blob) {
    const auto extra = nn::checkpoint_extra(blob);
    const auto newline = extra.find('\n');
    if (newline == std::string::npos) throw Error("checkpoint: missing network dims");
    std::istringstream dims_line(extra.substr(0, newline));
    std::string tag;
    NetworkDims dims;
    dims_line >> tag >> dims.embedding_dim >> dims.hidden_dim >> dims.lstm_layers;
    if (!dims_line || tag != "dims") throw Error("checkpoint: malformed network dims");
    auto vocab = Vocabulary::from_text(extra.substr(newline + 1));
    QNetwork net(vocab.size(), dims, 0);
    nn::decode_checkpoint(blob, net.parameters());
    return {std::move(net), std::move(vocab)};
}

}  // namespace roommem
