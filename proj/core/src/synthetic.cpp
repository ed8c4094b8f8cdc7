#include "hashgen/corpus.hpp"
#include "hashgen/rng.hpp"

namespace hashgen {

namespace {

// Pronounceable unique surface forms: base-40 syllable spelling of the index.
const char* kSyllables[40] = {"ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
                              "ka", "ke", "ki", "ko", "ku", "ma", "me", "mi", "mo", "mu",
                              "na", "ne", "ni", "no", "nu", "ra", "re", "ri", "ro", "ru",
                              "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu"};

std::string synth_word(int index) {
    std::string w;
    w += kSyllables[(index / 40) % 40];
    w += kSyllables[index % 40];
    if (index >= 1600) w += kSyllables[(index / 1600) % 40];
    return w;
}

// Per-topic word budget: up to 3 keyphrase words plus 6 indicative words.
constexpr int kKeySlots = 3;
constexpr int kIndicative = 6;
constexpr int kTopicBlock = kKeySlots + kIndicative;
constexpr int kMinNoise = 10;

} // namespace

std::vector<Instance> generate_synthetic(const SynthConfig& config) {
    if (config.n_topics < 1) throw contract_error("generate_synthetic: n_topics must be >= 1");
    if (config.n_instances < 1) throw contract_error("generate_synthetic: n_instances must be >= 1");
    int needed = config.n_topics * kTopicBlock + kMinNoise;
    if (config.vocab_size < needed)
        throw contract_error("generate_synthetic: vocab_size " + std::to_string(config.vocab_size) +
                             " too small for " + std::to_string(config.n_topics) + " topics (need >= " +
                             std::to_string(needed) + ")");

    Rng topic_rng = Rng::child(config.seed, "synth.topics");
    struct Topic {
        TokenSeq keyphrase;
        TokenSeq indicative;
    };
    std::vector<Topic> topics(static_cast<std::size_t>(config.n_topics));
    for (int k = 0; k < config.n_topics; ++k) {
        int base = k * kTopicBlock;
        int key_len = topic_rng.uniform_int(1, kKeySlots);
        Topic& t = topics[static_cast<std::size_t>(k)];
        for (int i = 0; i < key_len; ++i) t.keyphrase.push_back(synth_word(base + i));
        for (int i = 0; i < kIndicative; ++i) t.indicative.push_back(synth_word(base + kKeySlots + i));
    }

    int noise_base = config.n_topics * kTopicBlock;
    int noise_count = config.vocab_size - noise_base;

    Rng rng = Rng::child(config.seed, "synth.instances");
    auto noise_word = [&]() { return synth_word(noise_base + rng.uniform_int(0, noise_count - 1)); };

    bool post_signal = config.signal_location != SignalLocation::conversation;
    bool conv_signal = config.signal_location != SignalLocation::post;

    std::vector<Instance> out;
    out.reserve(static_cast<std::size_t>(config.n_instances));
    for (int n = 0; n < config.n_instances; ++n) {
        const Topic& topic = topics[static_cast<std::size_t>(rng.uniform_int(0, config.n_topics - 1))];
        Instance inst;

        int post_len = rng.uniform_int(6, 10);
        int post_sig = post_signal ? rng.uniform_int(2, 4) : 0;
        for (int i = 0; i < post_sig; ++i)
            inst.post.push_back(topic.indicative[static_cast<std::size_t>(rng.uniform_int(0, kIndicative - 1))]);
        while (static_cast<int>(inst.post.size()) < post_len) inst.post.push_back(noise_word());
        rng.shuffle(inst.post);

        int turns = rng.uniform_int(2, 3);
        for (int turn = 0; turn < turns; ++turn) {
            TokenSeq words;
            int turn_len = rng.uniform_int(4, 7);
            int turn_sig = conv_signal ? rng.uniform_int(1, 3) : 0;
            for (int i = 0; i < turn_sig; ++i)
                words.push_back(topic.indicative[static_cast<std::size_t>(rng.uniform_int(0, kIndicative - 1))]);
            while (static_cast<int>(words.size()) < turn_len) words.push_back(noise_word());
            rng.shuffle(words);
            if (turn > 0) inst.conversation.push_back(kTurnSeparator);
            inst.conversation.insert(inst.conversation.end(), words.begin(), words.end());
        }

        inst.hashtags.push_back(topic.keyphrase);
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace hashgen
