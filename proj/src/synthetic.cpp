#include "questcnn/synthetic.hpp"

#include <array>
#include <string>
#include <vector>

#include "questcnn/errors.hpp"
#include "questcnn/rng.hpp"

namespace questcnn::synthetic {

namespace {

template <std::size_t N>
const char* pick(const std::array<const char*, N>& xs, Rng& rng) {
  return xs[rng.below(N)];
}

std::string make_id(const char* prefix, std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(prefix) + std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

// Pronounceable nonsense stem ending in 'o', so the heuristic tagger
// leaves it as a plain noun and stem + "ing" becomes VBG.
std::string invent_stem(Rng& rng) {
  static constexpr std::array<char, 14> consonants = {'b', 'd', 'f', 'g', 'k', 'm', 'n',
                                                      'p', 'r', 't', 'v', 'z', 'j', 'h'};
  static constexpr std::array<char, 4> vowels = {'a', 'e', 'i', 'u'};
  std::string s;
  const auto syllables = 2 + rng.below(2);
  for (std::size_t i = 0; i < syllables; ++i) {
    s += consonants[rng.below(consonants.size())];
    s += i + 1 == syllables ? 'o' : vowels[rng.below(vowels.size())];
  }
  return s;
}

}  // namespace

Dataset separable(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<const char*, 8> filler = {"the", "report", "looks", "fine",
                                                        "today", "overall", "we", "noted"};
  static constexpr std::array<const char*, 3> cue = {"whether", "this", "done"};
  Rng rng(seed);
  std::vector<LabeledSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(i % 3);
    std::string text;
    const auto len = 2 + rng.below(4);
    const auto at = rng.below(len + 1);
    for (std::size_t t = 0; t <= len; ++t) {
      if (!text.empty()) text += ' ';
      text += t == at ? cue[c] : pick(filler, rng);
    }
    out.push_back({make_id("s", i), text, kAllLabels[c], std::nullopt, std::nullopt, std::nullopt});
  }
  return Dataset(std::move(out));
}

Dataset order_pos_task(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<const char*, 5> lead = {"so", "well", "now", "then", "ok"};
  static constexpr std::array<const char*, 5> tail = {"here", "again", "today", "there", "too"};
  Rng rng(seed);
  std::vector<LabeledSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = i % 3;
    const bool ing = c == 1 || (c == 2 && rng.bernoulli(0.5));
    const std::string x = invent_stem(rng) + (ing ? "ing" : "");
    std::string text;
    if (rng.bernoulli(0.5)) text += std::string(pick(lead, rng)) + ' ';
    text += c == 2 ? "it is " : "is it ";
    text += x;
    if (rng.bernoulli(0.5)) text += ' ' + std::string(pick(tail, rng));
    out.push_back({make_id("op", i), text, kAllLabels[c], std::nullopt, std::nullopt, std::nullopt});
  }
  return Dataset(std::move(out));
}

Dataset dialogue_corpus(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<const char*, 12> finding = {
      "hernia", "lesion", "fracture", "effusion", "nodule", "stenosis",
      "edema",  "mass",   "infarct",  "cyst",     "tumor",  "aneurysm"};
  static constexpr std::array<const char*, 10> organ = {
      "liver", "kidney", "lung", "spleen", "colon", "aorta", "pancreas", "bladder", "heart", "spine"};
  static constexpr std::array<const char*, 6> wh = {"what", "where", "when", "why", "how", "who"};
  static constexpr std::array<const char*, 6> verb = {"described", "measured", "seen",
                                                      "reported", "missed", "confirmed"};
  static constexpr std::array<const char*, 6> demonstrative = {"this one", "that part", "here",
                                                               "this",     "that one",  "these"};
  Rng rng(seed);
  std::vector<LabeledSentence> out;
  std::size_t dialogue = 0, position = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (position == 0 || rng.bernoulli(0.15)) {
      ++dialogue;
      position = 0;
    }
    const double u = rng.uniform();
    std::string text;
    Label label;
    const std::string f = pick(finding, rng), o = pick(organ, rng), v = pick(verb, rng);
    if (u < 0.12) {
      label = Label::question;
      switch (rng.below(4)) {
        case 0: text = std::string(pick(wh, rng)) + " was the " + f + " " + v + " in the " + o + " ?"; break;
        case 1: text = "did you see the " + f + " in the " + o + " ?"; break;
        case 2: text = "is the " + o + " " + f + " new"; break;  // question without a mark
        default: text = "can you clarify the " + f + " ?"; break;
      }
    } else if (u < 0.2) {
      label = Label::c_question;
      text = std::string(pick(demonstrative, rng)) + (rng.bernoulli(0.8) ? " ?" : "");
    } else {
      label = Label::non_question;
      switch (rng.below(5)) {
        case 0: text = "the " + f + " in the " + o + " was " + v + " ."; break;
        case 1: text = "no " + f + " of the " + o + " ."; break;
        case 2: text = "please see comments on the " + o + (rng.bernoulli(0.3) ? " ?" : " ."); break;
        case 3: text = "I agree with the " + o + " findings ."; break;
        default: text = "we " + v + " what the " + f + " was ."; break;
      }
    }
    out.push_back({make_id("d", i), text, label, std::nullopt, "dlg" + std::to_string(dialogue),
                   static_cast<std::int64_t>(position++)});
  }
  return Dataset(std::move(out));
}

}  // namespace questcnn::synthetic
