#include "hashgen/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace hashgen {

int compare_hypotheses(const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob ? -1 : 1;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size() ? -1 : 1;
    if (a.tokens != b.tokens) return a.tokens < b.tokens ? -1 : 1;
    return 0;
}

bool hypothesis_precedes(const Hypothesis& a, const Hypothesis& b) {
    return compare_hypotheses(a, b) < 0;
}

namespace {

struct Candidate {
    double score = 0.0;
    std::size_t parent = 0;
    int token = -1;
};

} // namespace

RankedOutput beam_search(const std::vector<int>& post_ids, const std::vector<int>& conv_ids,
                         const ModelConfig& cfg, const Parameters& params, const Vocabulary& vocab,
                         const BeamConfig& beam) {
    if (beam.beam_width < 1) throw config_error("beam_search: beam_width must be >= 1");
    if (beam.top_k < 1 || beam.top_k > beam.beam_width)
        throw config_error("beam_search: K must satisfy 1 <= K <= beam_width, got K=" +
                           std::to_string(beam.top_k) + " beam_width=" + std::to_string(beam.beam_width));
    if (beam.max_len < 1) throw config_error("beam_search: max_len must be >= 1");
    if (beam.min_len < 1 || beam.min_len > beam.max_len)
        throw config_error("beam_search: min_len must satisfy 1 <= min_len <= max_len");
    if (vocab.size() != cfg.vocab_size)
        throw contract_error("beam_search: vocabulary size " + std::to_string(vocab.size()) +
                             " does not match model vocab_size " + std::to_string(cfg.vocab_size));

    Tape tape;
    ModelSession session(tape, cfg, params, /*trainable=*/false);
    EncodedPair enc = session.encode(post_ids, conv_ids, PadMask::all_real(post_ids.size()),
                                     PadMask::all_real(conv_ids.size()));

    const int V = cfg.vocab_size;
    // Emission bar: PAD, UNK and BOS never, EOS only past min_len.
    Tensor base_penalty = Tensor::zeros({1, V});
    base_penalty.at(0, Vocabulary::kPad) = -1e9;
    base_penalty.at(0, Vocabulary::kUnk) = -1e9;
    base_penalty.at(0, Vocabulary::kBos) = -1e9;
    Tensor eos_bar = base_penalty;
    eos_bar.at(0, Vocabulary::kEos) = -1e9;
    Var penalty_free = tape.constant(base_penalty);
    Var penalty_no_eos = tape.constant(eos_bar);

    std::vector<Hypothesis> live;
    live.push_back(Hypothesis{{}, 0.0, session.initial_decoder_state(enc), false});
    std::vector<Hypothesis> finished;

    for (int step = 1; step <= beam.max_len && !live.empty(); ++step) {
        std::vector<Candidate> candidates;
        std::vector<DecoderState> next_states(live.size());
        for (std::size_t h = 0; h < live.size(); ++h) {
            const Hypothesis& hyp = live[h];
            int prev = hyp.tokens.empty() ? Vocabulary::kBos : hyp.tokens.back();
            DecodeStep ds = session.decode_step(hyp.state, prev, enc.memory, enc.memory_mask);
            next_states[h] = ds.next;
            bool eos_allowed = static_cast<int>(hyp.tokens.size()) >= beam.min_len;
            Var masked = tape.add(ds.logits, eos_allowed ? penalty_free : penalty_no_eos);
            Var logp = tape.log_softmax_rows(masked);
            const Tensor& lp = tape.value(logp);
            for (int v = 0; v < V; ++v) {
                if (v == Vocabulary::kPad || v == Vocabulary::kUnk || v == Vocabulary::kBos) continue;
                if (v == Vocabulary::kEos && !eos_allowed) continue;
                double score = hyp.log_prob + lp.at(0, v);
                if (score > hyp.log_prob + 1e-12)
                    throw numeric_error("beam_search: extension score exceeds parent score");
                candidates.push_back(Candidate{score, h, v});
            }
        }

        auto candidate_precedes = [&](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            const auto& ta = live[a.parent].tokens;
            const auto& tb = live[b.parent].tokens;
            if (ta != tb) return ta < tb;
            return a.token < b.token;
        };
        std::sort(candidates.begin(), candidates.end(), candidate_precedes);

        std::vector<Hypothesis> next_live;
        for (const Candidate& cand : candidates) {
            if (cand.token == Vocabulary::kEos) {
                Hypothesis done = live[cand.parent];
                done.log_prob = cand.score;
                done.finished = true;
                done.state = next_states[cand.parent];
                finished.push_back(std::move(done));
                continue;
            }
            if (static_cast<int>(next_live.size()) >= beam.beam_width) continue;
            Hypothesis ext = live[cand.parent];
            ext.tokens.push_back(cand.token);
            ext.log_prob = cand.score;
            ext.state = next_states[cand.parent];
            ext.state.last_token = cand.token;
            next_live.push_back(std::move(ext));
        }
        live = std::move(next_live);
    }

    // Finished hypotheses outrank truncated ones; each class sorts by score
    // with the deterministic tiebreak.
    std::sort(finished.begin(), finished.end(), hypothesis_precedes);
    std::sort(live.begin(), live.end(), hypothesis_precedes);
    std::vector<Hypothesis> ranked = std::move(finished);
    ranked.insert(ranked.end(), live.begin(), live.end());

    RankedOutput out;
    std::map<std::vector<int>, bool> seen;
    std::size_t finished_items = 0;
    for (const Hypothesis& hyp : ranked) {
        if (static_cast<int>(out.items.size()) >= beam.top_k) break;
        if (hyp.tokens.empty()) continue;
        auto [it, inserted] = seen.emplace(hyp.tokens, true);
        if (!inserted) continue;
        out.items.push_back(ScoredTag{vocab.decode(hyp.tokens), hyp.log_prob});
        if (hyp.finished) finished_items = out.items.size();
    }

    // Scores are nonincreasing inside each class; the finished block ranks
    // ahead of truncated hypotheses regardless of raw score.
    for (std::size_t i = 1; i < out.items.size(); ++i) {
        if (i == finished_items) continue;
        if (out.items[i - 1].score < out.items[i].score)
            throw error("beam_search: ranked output is not sorted");
    }
    if (static_cast<int>(out.items.size()) > beam.top_k)
        throw error("beam_search: output exceeds K");
    return out;
}

AttentionDump attention_matrices(const std::vector<int>& post_ids, const std::vector<int>& conv_ids,
                                 const ModelConfig& cfg, const Parameters& params) {
    Tape tape;
    ModelSession session(tape, cfg, params, /*trainable=*/false);
    EncodedPair enc = session.encode(post_ids, conv_ids, PadMask::all_real(post_ids.size()),
                                     PadMask::all_real(conv_ids.size()));
    AttentionDump dump;
    if (enc.alpha_post_over_conv.valid()) dump.post_over_conv = tape.value(enc.alpha_post_over_conv);
    if (enc.alpha_conv_over_post.valid()) dump.conv_over_post = tape.value(enc.alpha_conv_over_post);
    return dump;
}

} // namespace hashgen
