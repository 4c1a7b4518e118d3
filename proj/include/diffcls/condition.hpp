#pragma once

#include <string>

#include "diffcls/errors.hpp"

namespace diffcls {

// Discrete stand-in for text prompts. CLASS(k) plays the role of a
// class-specific description, NONCLASS a class-free one, NULLCOND the empty
// prompt. Each maps to one row of the (K+2)-row condition-embedding table.
enum class CondKind { Class, NonClass, Null };

struct Condition {
    CondKind kind = CondKind::Null;
    int class_index = -1; // meaningful iff kind == Class

    static Condition cls(int k) { return {CondKind::Class, k}; }
    static Condition nonclass() { return {CondKind::NonClass, -1}; }
    static Condition null() { return {CondKind::Null, -1}; }

    // Row in the embedding table: classes first, then NONCLASS, then NULL.
    int token_index(int num_classes) const {
        switch (kind) {
        case CondKind::Class:
            if (class_index < 0 || class_index >= num_classes)
                throw ArgumentError("condition class index " + std::to_string(class_index) +
                                    " out of range 0.." + std::to_string(num_classes - 1));
            return class_index;
        case CondKind::NonClass:
            return num_classes;
        case CondKind::Null:
            return num_classes + 1;
        }
        throw ArgumentError("condition: invalid kind");
    }

    std::string describe() const {
        switch (kind) {
        case CondKind::Class: return "class(" + std::to_string(class_index) + ")";
        case CondKind::NonClass: return "nonclass";
        case CondKind::Null: return "null";
        }
        return "?";
    }
};

inline bool operator==(const Condition& a, const Condition& b) {
    return a.kind == b.kind && (a.kind != CondKind::Class || a.class_index == b.class_index);
}

} // namespace diffcls
