#include "opensc/eval.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "opensc/error.hpp"

namespace opensc {

const std::array<QuestionType, 4>& all_question_types() {
  static const std::array<QuestionType, 4> kAll = {QuestionType::kCategory, QuestionType::kQuantity,
                                                   QuestionType::kLocation, QuestionType::kRelationship};
  return kAll;
}

std::string to_string(QuestionType q) {
  switch (q) {
    case QuestionType::kCategory: return "Category";
    case QuestionType::kQuantity: return "Quantity";
    case QuestionType::kLocation: return "Location";
    case QuestionType::kRelationship: return "Relationship";
  }
  return "?";
}

QuestionType parse_question_type(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto q : all_question_types()) {
    auto label = to_string(q);
    for (auto& c : label) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (label == lower) return q;
  }
  throw validation_error("unknown question type '" + std::string(name) + "'");
}

std::string default_question(QuestionType q) {
  switch (q) {
    case QuestionType::kCategory: return "What categories of objects are in the image?";
    case QuestionType::kQuantity: return "How many objects of each category are there?";
    case QuestionType::kLocation: return "Where is each object located in the image?";
    case QuestionType::kRelationship: return "What are the relations between the objects?";
  }
  return {};
}

ItemSet ground_truth(const StructuredSummary& clean, QuestionType q) {
  ItemSet items;
  switch (q) {
    case QuestionType::kCategory:
      for (const auto& [category, count] : clean.number) items.insert(category);
      break;
    case QuestionType::kQuantity:
      for (const auto& [category, count] : clean.number) items.insert(category + "=" + std::to_string(count));
      break;
    case QuestionType::kLocation:
      for (const auto& [id, loc] : clean.location) items.insert(loc.category + "@" + loc.region);
      break;
    case QuestionType::kRelationship:
      for (const auto& t : clean.relationship) items.insert(t.subject + "|" + t.predicate + "|" + t.object);
      break;
  }
  return items;
}

// ---------------------------------------------------------------------------

namespace {

const char* const kNumberWords[] = {"zero",  "one",  "two", "three", "four", "five", "six",
                                    "seven", "eight", "nine", "ten",  "eleven", "twelve"};

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::optional<int> parse_number(const std::string& word) {
  if (!word.empty() && std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); })) {
    if (word.size() > 6) return std::nullopt;
    return std::stoi(word);
  }
  for (int i = 0; i < static_cast<int>(std::size(kNumberWords)); ++i) {
    if (word == kNumberWords[i]) return i;
  }
  return std::nullopt;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += " ";
    out += words[i];
  }
  return out;
}

}  // namespace

ClaimExtractor::ClaimExtractor(const LabelList& categories, const LabelList& predicates) {
  for (const auto& c : categories.labels()) category_phrases_.push_back(split_words(c));
  for (const auto& p : predicates.labels()) predicate_phrases_.push_back(split_words(p));
  for (const auto* list : {&category_phrases_, &predicate_phrases_}) {
    for (const auto& phrase : *list) label_words_.insert(phrase.begin(), phrase.end());
  }
}

std::vector<std::string> ClaimExtractor::normalize_words(std::string_view clause) const {
  auto raw = split_words(clause);
  // Detokenized text spaces hyphens out ("top - left"); glue them back.
  std::vector<std::string> words;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "-" && !words.empty() && i + 1 < raw.size()) {
      words.back() += "-" + raw[++i];
    } else {
      words.push_back(raw[i]);
    }
  }
  for (auto& w : words) {
    if (w.size() > 1 && w.back() == 's' && !label_words_.count(w) &&
        label_words_.count(w.substr(0, w.size() - 1))) {
      w.pop_back();
    }
  }
  return words;
}

std::vector<std::vector<ClaimExtractor::Mention>> ClaimExtractor::mentions(std::string_view answer) const {
  std::vector<std::vector<Mention>> clauses;
  const auto& regions = region_labels();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= answer.size(); ++i) {
    const bool end = i == answer.size();
    const char c = end ? '.' : answer[i];
    if (c != '.' && c != ';' && c != '!' && c != '?' && c != '\n') continue;
    const auto words = normalize_words(answer.substr(start, i - start));
    start = i + 1;

    std::vector<Mention> found;
    for (std::size_t pos = 0; pos < words.size();) {
      std::size_t best_len = 0;
      Mention best{MentionKind::kNumber, {}};
      auto try_phrases = [&](const std::vector<std::vector<std::string>>& phrases, MentionKind kind) {
        for (const auto& phrase : phrases) {
          if (phrase.empty() || phrase.size() <= best_len || pos + phrase.size() > words.size()) continue;
          if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(pos))) {
            best_len = phrase.size();
            best = {kind, join(phrase)};
          }
        }
      };
      try_phrases(category_phrases_, MentionKind::kCategory);
      try_phrases(predicate_phrases_, MentionKind::kPredicate);
      if (best_len == 0) {
        if (std::find(regions.begin(), regions.end(), words[pos]) != regions.end()) {
          best_len = 1;
          best = {MentionKind::kRegion, words[pos]};
        } else if (auto n = parse_number(words[pos])) {
          best_len = 1;
          best = {MentionKind::kNumber, std::to_string(*n)};
        }
      }
      if (best_len == 0) {
        ++pos;
        continue;
      }
      found.push_back(std::move(best));
      pos += best_len;
    }
    if (!found.empty()) clauses.push_back(std::move(found));
  }
  return clauses;
}

ItemSet ClaimExtractor::extract(std::string_view answer, QuestionType q) const {
  ItemSet items;
  const auto clauses = mentions(answer);
  std::string last_category;
  for (const auto& clause : clauses) {
    for (std::size_t i = 0; i < clause.size(); ++i) {
      const auto& m = clause[i];
      switch (q) {
        case QuestionType::kCategory:
          if (m.kind == MentionKind::kCategory) items.insert(m.value);
          break;
        case QuestionType::kQuantity:
          if (m.kind == MentionKind::kNumber) {
            for (std::size_t j = i + 1; j < clause.size() && clause[j].kind != MentionKind::kNumber; ++j) {
              if (clause[j].kind == MentionKind::kCategory) {
                items.insert(clause[j].value + "=" + m.value);
                break;
              }
            }
          }
          break;
        case QuestionType::kLocation:
          if (m.kind == MentionKind::kCategory) last_category = m.value;
          if (m.kind == MentionKind::kRegion && !last_category.empty()) items.insert(last_category + "@" + m.value);
          break;
        case QuestionType::kRelationship:
          break;
      }
    }
    if (q == QuestionType::kRelationship) {
      std::vector<const Mention*> seq;
      for (const auto& m : clause) {
        if (m.kind == MentionKind::kCategory || m.kind == MentionKind::kPredicate) seq.push_back(&m);
      }
      for (std::size_t i = 0; i + 2 < seq.size(); ++i) {
        if (seq[i]->kind == MentionKind::kCategory && seq[i + 1]->kind == MentionKind::kPredicate &&
            seq[i + 2]->kind == MentionKind::kCategory) {
          items.insert(seq[i]->value + "|" + seq[i + 1]->value + "|" + seq[i + 2]->value);
        }
      }
    }
  }
  return items;
}

Score score(const ItemSet& answer, const ItemSet& truth) {
  Score s;
  s.truth = truth.size();
  s.predicted = answer.size();
  for (const auto& item : answer) s.matched += truth.count(item);
  if (truth.empty()) {
    s.recall = answer.empty() ? 1.0 : 0.0;
  } else {
    s.recall = static_cast<double>(s.matched) / static_cast<double>(s.truth);
  }
  if (answer.empty()) {
    s.precision = truth.empty() ? 1.0 : 0.0;
  } else {
    s.precision = static_cast<double>(s.matched) / static_cast<double>(s.predicted);
  }
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0 ? 2 * s.precision * s.recall / denom : 0.0;
  return s;
}

}  // namespace opensc
