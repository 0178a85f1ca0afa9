#pragma once

#include "finstat/store/mapping.hpp"
#include "finstat/store/warehouse.hpp"
#include "finstat/vec/index.hpp"

namespace finstat::vec {

// Fills the industry, company, account and ratio namespaces. Every entry
// carries metadata "code": the value an entity resolves to (industry name,
// stock code, unified category code or ratio code). Account entries come from
// the catalog descriptions and from every mapping label.
void index_warehouse(VectorIndex& index, const store::Warehouse& warehouse, const store::AccountMapping& mapping);

}  // namespace finstat::vec
