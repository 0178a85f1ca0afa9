#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// Syntax tree for the SELECT subset accepted by the guard. Unquoted
// identifiers are stored lower-cased; quoted identifiers keep their spelling.
// Source offsets are carried for diagnostics but never take part in equality.
namespace finstat::guard {

// Owning pointer with deep copy and deep equality, so tree nodes keep value semantics.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  explicit operator bool() const { return ptr_ != nullptr; }
  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  T* get() { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

struct Expr;
struct Query;

struct Literal {
  enum class Type { integer, real, string, boolean, null };
  Type type = Type::null;
  // Numbers keep their source spelling; strings are unescaped; booleans are "TRUE"/"FALSE".
  std::string text;

  bool operator==(const Literal&) const = default;
};

struct ColumnRef {
  std::string qualifier;  // empty when unqualified
  std::string name;

  bool operator==(const ColumnRef&) const = default;
};

// `*` or `qualifier.*`; only valid as a select item.
struct Star {
  std::string qualifier;

  bool operator==(const Star&) const = default;
};

struct UnaryOp {
  std::string op;  // "-", "+", "NOT"
  Box<Expr> operand;

  bool operator==(const UnaryOp&) const = default;
};

struct BinaryOp {
  // "OR", "AND", "=", "<>", "<", "<=", ">", ">=", "IS", "IS NOT", "LIKE",
  // "NOT LIKE", "+", "-", "*", "/", "%", "||"
  std::string op;
  Box<Expr> lhs;
  Box<Expr> rhs;

  bool operator==(const BinaryOp&) const = default;
};

struct FunctionCall {
  std::string name;
  bool distinct = false;
  bool star = false;  // count(*)
  std::vector<Expr> args;

  bool operator==(const FunctionCall&) const = default;
};

struct WhenClause;

struct CaseExpr {
  Box<Expr> operand;  // empty for searched CASE
  std::vector<WhenClause> whens;
  Box<Expr> otherwise;

  bool operator==(const CaseExpr&) const = default;
};

struct CastExpr {
  Box<Expr> operand;
  std::string type_name;

  bool operator==(const CastExpr&) const = default;
};

struct BetweenExpr {
  Box<Expr> value;
  Box<Expr> low;
  Box<Expr> high;
  bool negated = false;

  bool operator==(const BetweenExpr&) const = default;
};

struct InExpr {
  Box<Expr> value;
  std::vector<Expr> list;  // used when subquery is empty
  Box<Query> subquery;
  bool negated = false;

  bool operator==(const InExpr&) const = default;
};

struct ExistsExpr {
  Box<Query> query;
  bool negated = false;

  bool operator==(const ExistsExpr&) const = default;
};

struct SubqueryExpr {
  Box<Query> query;

  bool operator==(const SubqueryExpr&) const = default;
};

struct Expr {
  using Node = std::variant<Literal, ColumnRef, Star, UnaryOp, BinaryOp, FunctionCall, CaseExpr,
                            CastExpr, BetweenExpr, InExpr, ExistsExpr, SubqueryExpr>;
  Node node;
  std::size_t offset = 0;

  bool operator==(const Expr& other) const { return node == other.node; }
};

struct WhenClause {
  Expr condition;
  Expr result;

  bool operator==(const WhenClause&) const = default;
};

struct TableRef;

struct NamedTable {
  std::string name;
  std::string alias;

  bool operator==(const NamedTable&) const = default;
};

struct DerivedTable {
  Box<Query> query;
  std::string alias;

  bool operator==(const DerivedTable&) const = default;
};

enum class JoinKind { inner, left, right, full, cross };

struct JoinedTable {
  JoinKind kind = JoinKind::inner;
  Box<TableRef> left;
  Box<TableRef> right;
  std::optional<Expr> on;
  std::vector<std::string> using_columns;

  bool operator==(const JoinedTable&) const = default;
};

struct TableRef {
  std::variant<NamedTable, DerivedTable, JoinedTable> node;
  std::size_t offset = 0;

  bool operator==(const TableRef& other) const { return node == other.node; }
};

struct SelectItem {
  Expr expr;
  std::string alias;

  bool operator==(const SelectItem&) const = default;
};

struct SelectCore {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<TableRef> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;

  bool operator==(const SelectCore&) const = default;
};

enum class SetOp { union_distinct, union_all, intersect, except };

struct CompoundPart {
  SetOp op = SetOp::union_distinct;
  SelectCore core;

  bool operator==(const CompoundPart&) const = default;
};

struct OrderItem {
  Expr expr;
  bool descending = false;
  std::optional<bool> nulls_first;

  bool operator==(const OrderItem&) const = default;
};

struct Cte {
  std::string name;
  std::vector<std::string> columns;
  Box<Query> query;

  bool operator==(const Cte&) const = default;
};

struct Query {
  bool recursive = false;
  std::vector<Cte> ctes;
  SelectCore core;
  std::vector<CompoundPart> compounds;
  std::vector<OrderItem> order_by;
  std::optional<Expr> limit;
  std::optional<Expr> offset;

  bool operator==(const Query&) const = default;
};

// A statement the grammar does not model (INSERT, DROP, PRAGMA, ...). Kept so
// the guard can name the offending statement class instead of failing to parse.
struct OtherStatement {
  std::string head;  // upper-cased leading keyword, e.g. "DELETE"
  std::string text;

  bool operator==(const OtherStatement&) const = default;
};

struct Statement {
  std::variant<Query, OtherStatement> body;
  std::size_t offset = 0;

  bool is_query() const { return std::holds_alternative<Query>(body); }
  bool operator==(const Statement& other) const { return body == other.body; }
};

struct Script {
  std::vector<Statement> statements;

  bool operator==(const Script&) const = default;
};

}  // namespace finstat::guard
