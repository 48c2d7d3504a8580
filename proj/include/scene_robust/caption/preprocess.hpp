// Copyright 2026 The scene-robust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace scene_robust {

// Stop words: the common English function-word list (articles, pronouns,
// prepositions, quantifiers, auxiliaries) used by mainstream NLP toolkits.
inline const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "across", "after", "afterwards", "again", "against", "all", "almost", "alone",
      "along", "already", "also", "although", "always", "am", "among", "amongst", "amount", "an", "and",
      "another", "any", "anyhow", "anyone", "anything", "anyway", "anywhere", "are", "around", "as", "at",
      "back", "be", "became", "because", "become", "becomes", "becoming", "been", "before", "beforehand",
      "behind", "being", "below", "beside", "besides", "between", "beyond", "both", "bottom", "but", "by",
      "ca", "call", "can", "cannot", "could", "did", "do", "does", "doing", "done", "down", "due", "during",
      "each", "eight", "either", "eleven", "else", "elsewhere", "empty", "enough", "even", "ever", "every",
      "everyone", "everything", "everywhere", "except", "few", "fifteen", "fifty", "first", "five", "for",
      "former", "formerly", "forty", "four", "from", "front", "full", "further", "get", "give", "go", "had",
      "has", "have", "he", "hence", "her", "here", "hereafter", "hereby", "herein", "hereupon", "hers",
      "herself", "him", "himself", "his", "how", "however", "hundred", "i", "if", "in", "indeed", "into",
      "is", "it", "its", "itself", "just", "keep", "last", "latter", "latterly", "least", "less", "made",
      "make", "many", "may", "me", "meanwhile", "might", "mine", "more", "moreover", "most", "mostly",
      "move", "much", "must", "my", "myself", "name", "namely", "neither", "never", "nevertheless", "next",
      "nine", "no", "nobody", "none", "noone", "nor", "not", "nothing", "now", "nowhere", "of", "off",
      "often", "on", "once", "one", "only", "onto", "or", "other", "others", "otherwise", "our", "ours",
      "ourselves", "out", "over", "own", "part", "per", "perhaps", "please", "put", "quite", "rather", "re",
      "really", "regarding", "same", "say", "see", "seem", "seemed", "seeming", "seems", "serious",
      "several", "she", "should", "show", "side", "since", "six", "sixty", "so", "some", "somehow",
      "someone", "something", "sometime", "sometimes", "somewhere", "still", "such", "take", "ten", "than",
      "that", "the", "their", "them", "themselves", "then", "thence", "there", "thereafter", "thereby",
      "therefore", "therein", "thereupon", "these", "they", "third", "this", "those", "though", "three",
      "through", "throughout", "thru", "thus", "to", "together", "too", "top", "toward", "towards",
      "twelve", "twenty", "two", "under", "unless", "until", "up", "upon", "us", "used", "using",
      "various", "very", "via", "was", "we", "well", "were", "what", "whatever", "when", "whence",
      "whenever", "where", "whereafter", "whereas", "whereby", "wherein", "whereupon", "wherever",
      "whether", "which", "while", "whither", "who", "whoever", "whole", "whom", "whose", "why", "will",
      "with", "within", "without", "would", "yet", "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

inline const std::set<std::string>& default_person_nouns() {
  static const std::set<std::string> nouns = {"man", "woman", "girl", "boy"};
  return nouns;
}

/// Rule-based lemmatizer: an irregular-form table, then plural suffix rules.
/// Verb participles are only handled through the table because suffix
/// stripping would mangle nouns such as "ceiling" or "painting".
inline std::string lemmatize(std::string_view word) {
  static const std::unordered_map<std::string_view, std::string_view> irregular = {
      {"men", "man"},         {"women", "woman"},     {"children", "child"},  {"people", "person"},
      {"feet", "foot"},       {"teeth", "tooth"},     {"mice", "mouse"},      {"geese", "goose"},
      {"knives", "knife"},    {"shelves", "shelf"},   {"leaves", "leaf"},     {"wives", "wife"},
      {"lives", "life"},      {"loaves", "loaf"},     {"halves", "half"},     {"wolves", "wolf"},
      {"sitting", "sit"},     {"sat", "sit"},         {"standing", "stand"},  {"stood", "stand"},
      {"lying", "lie"},       {"laying", "lay"},      {"running", "run"},     {"making", "make"},
      {"taking", "take"},     {"having", "have"},     {"riding", "ride"},     {"driving", "drive"},
      {"playing", "play"},    {"holding", "hold"},    {"looking", "look"},    {"eating", "eat"},
      {"walking", "walk"},    {"working", "work"},    {"talking", "talk"},    {"waiting", "wait"},
      {"cooking", "cook"},    {"reading", "read"},    {"filled", "fill"},     {"covered", "cover"},
      {"stacked", "stack"},   {"lined", "line"},      {"parked", "park"},     {"seated", "seat"},
      {"clothes", "clothes"}, {"pants", "pants"},     {"glasses", "glass"},   {"series", "series"},
      {"species", "species"}, {"news", "news"},       {"scissors", "scissors"}, {"is", "be"},
      {"are", "be"},          {"was", "be"},          {"were", "be"},         {"has", "have"},
      {"dice", "die"},        {"oxen", "ox"},         {"cacti", "cactus"},    {"indices", "index"},
  };
  if (auto it = irregular.find(word); it != irregular.end()) return std::string(it->second);
  std::string w(word);
  auto ends = [&](std::string_view s) { return w.size() > s.size() && w.ends_with(s); };
  if (w.size() <= 3) return w;
  if (ends("ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends("sses") || ends("ches") || ends("shes") || ends("xes") || ends("zzes"))
    return w.substr(0, w.size() - 2);
  if (ends("ss") || ends("us") || ends("is")) return w;
  if (ends("s")) return w.substr(0, w.size() - 1);
  return w;
}

struct PreprocessOptions {
  /// Removed in addition to the default person nouns.
  std::set<std::string> extra_removed_nouns;
};

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    // possessive / contraction tails
    if (cur.ends_with("'s")) cur.resize(cur.size() - 2);
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    bool has_letter = false;
    for (unsigned char c : cur) has_letter |= (c >= 'a' && c <= 'z') || c >= 0x80;
    if (has_letter) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (c >= 'A' && c <= 'Z') cur += static_cast<char>(c - 'A' + 'a');
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'' || c >= 0x80) cur += static_cast<char>(c);
    else flush();
  }
  flush();
  return tokens;
}

/// Lower-cases, tokenizes, removes stop words and person nouns, lemmatizes.
/// Order and duplicates are preserved. Filtering is applied to both the raw
/// token and its lemma, so "men" and "others" never survive.
inline std::vector<std::string> preprocess_caption(std::string_view caption, const PreprocessOptions& opts = {}) {
  const auto& stops = stop_words();
  const auto& persons = default_person_nouns();
  auto removed = [&](const std::string& t) {
    return stops.contains(t) || persons.contains(t) || opts.extra_removed_nouns.contains(t);
  };
  std::vector<std::string> out;
  for (auto& tok : tokenize(caption)) {
    if (removed(tok)) continue;
    std::string lemma = lemmatize(tok);
    if (lemma.empty() || removed(lemma)) continue;
    out.push_back(std::move(lemma));
  }
  return out;
}

}  // namespace scene_robust
