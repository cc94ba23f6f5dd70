#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairrank/error.hpp"

namespace fairrank {

enum class Race { white, asian, hispanic, black };
enum class CountryClass { developed, underdeveloped };
enum class CareerStage { professor, associate_professor, lecturer, postdoc, student, industry };
enum class Tier { top, mid, low };

inline constexpr std::size_t kCareerStageCount = 6;

inline const char* to_string(Race r) {
    switch (r) {
        case Race::white: return "White";
        case Race::asian: return "Asian";
        case Race::hispanic: return "Hispanic";
        case Race::black: return "Black";
    }
    return "?";
}

inline const char* to_string(CountryClass c) {
    return c == CountryClass::developed ? "developed" : "underdeveloped";
}

inline const char* to_string(CareerStage s) {
    switch (s) {
        case CareerStage::professor: return "professor";
        case CareerStage::associate_professor: return "associate_professor";
        case CareerStage::lecturer: return "lecturer";
        case CareerStage::postdoc: return "postdoc";
        case CareerStage::student: return "student";
        case CareerStage::industry: return "industry";
    }
    return "?";
}

inline const char* to_string(Tier t) {
    switch (t) {
        case Tier::top: return "top";
        case Tier::mid: return "mid";
        case Tier::low: return "low";
    }
    return "?";
}

inline Race race_from_string(const std::string& s) {
    if (s == "White") return Race::white;
    if (s == "Asian") return Race::asian;
    if (s == "Hispanic") return Race::hispanic;
    if (s == "Black") return Race::black;
    throw ParseError("unknown race value '" + s + "'");
}

inline CountryClass country_class_from_string(const std::string& s) {
    if (s == "developed") return CountryClass::developed;
    if (s == "underdeveloped") return CountryClass::underdeveloped;
    throw ParseError("unknown country_class value '" + s + "'");
}

inline CareerStage career_stage_from_string(const std::string& s) {
    if (s == "professor") return CareerStage::professor;
    if (s == "associate_professor") return CareerStage::associate_professor;
    if (s == "lecturer") return CareerStage::lecturer;
    if (s == "postdoc") return CareerStage::postdoc;
    if (s == "student") return CareerStage::student;
    if (s == "industry") return CareerStage::industry;
    throw ParseError("unknown career_stage value '" + s + "'");
}

inline Tier tier_from_string(const std::string& s) {
    if (s == "top") return Tier::top;
    if (s == "mid") return Tier::mid;
    if (s == "low") return Tier::low;
    throw ParseError("unknown tier value '" + s + "'");
}

inline const char* conference_name(int conference) {
    switch (conference) {
        case 1: return "IUI";
        case 2: return "DIS";
        case 3: return "SIGCHI";
    }
    return "?";
}

struct AuthorRecord {
    std::string author_id;
    int gender = 0;  // 0 = male, 1 = female
    Race race = Race::white;
    CountryClass country_class = CountryClass::developed;
    CareerStage career_stage = CareerStage::student;
    double h_index = 0.0;

    bool is_protected_race() const { return race == Race::hispanic || race == Race::black; }
    bool is_protected_country() const { return country_class == CountryClass::underdeveloped; }
};

struct PaperRecord {
    std::string paper_id;
    std::string title;
    std::vector<std::string> author_ids;
    int conference = 3;  // 1 = IUI, 2 = DIS, 3 = SIGCHI
    int accepted = 0;
    std::optional<Tier> tier;  // synthetic corpora only
};

// Career-stage multipliers for the weighted h-index; indexed by CareerStage.
using StageWeights = std::array<double, kCareerStageCount>;

inline StageWeights default_stage_weights() {
    StageWeights w{};
    w[static_cast<std::size_t>(CareerStage::professor)] = 0.5;
    w[static_cast<std::size_t>(CareerStage::associate_professor)] = 0.65;
    w[static_cast<std::size_t>(CareerStage::lecturer)] = 0.8;
    w[static_cast<std::size_t>(CareerStage::postdoc)] = 0.9;
    w[static_cast<std::size_t>(CareerStage::student)] = 1.0;
    w[static_cast<std::size_t>(CareerStage::industry)] = 0.8;
    return w;
}

// Papers plus their resolved authors, with id lookup. The id maps point into
// the member vectors, so a Corpus is moved or referenced, never sliced.
struct Corpus {
    std::vector<PaperRecord> papers;
    std::vector<AuthorRecord> authors;
    std::unordered_map<std::string, std::size_t> paper_index;
    std::unordered_map<std::string, std::size_t> author_index;

    Corpus() = default;
    Corpus(std::vector<PaperRecord> p, std::vector<AuthorRecord> a)
        : papers(std::move(p)), authors(std::move(a)) {
        reindex();
    }

    void reindex() {
        paper_index.clear();
        author_index.clear();
        for (std::size_t i = 0; i < papers.size(); ++i) {
            if (!paper_index.emplace(papers[i].paper_id, i).second)
                throw ParseError("duplicate paper_id '" + papers[i].paper_id + "'");
        }
        for (std::size_t i = 0; i < authors.size(); ++i) {
            if (!author_index.emplace(authors[i].author_id, i).second)
                throw ParseError("duplicate author_id '" + authors[i].author_id + "'");
        }
        for (const PaperRecord& paper : papers) {
            if (paper.author_ids.empty())
                throw ParseError("paper '" + paper.paper_id + "' lists no authors");
            for (const std::string& id : paper.author_ids)
                if (!author_index.contains(id))
                    throw ParseError("paper '" + paper.paper_id + "' references unknown author '" +
                                     id + "'");
        }
    }

    const PaperRecord& paper(const std::string& id) const {
        auto it = paper_index.find(id);
        if (it == paper_index.end()) throw InvariantError("unknown paper id '" + id + "'");
        return papers[it->second];
    }

    const AuthorRecord& author(const std::string& id) const {
        auto it = author_index.find(id);
        if (it == author_index.end()) throw InvariantError("unknown author id '" + id + "'");
        return authors[it->second];
    }

    // A paper is protected on an attribute iff any listed author is.
    bool paper_protected_race(const PaperRecord& p) const {
        for (const auto& id : p.author_ids)
            if (author(id).is_protected_race()) return true;
        return false;
    }

    bool paper_protected_country(const PaperRecord& p) const {
        for (const auto& id : p.author_ids)
            if (author(id).is_protected_country()) return true;
        return false;
    }

    bool paper_any_female(const PaperRecord& p) const {
        for (const auto& id : p.author_ids)
            if (author(id).gender == 1) return true;
        return false;
    }
};

}  // namespace fairrank
