use std::fmt;

use serde::{Deserialize, Serialize};

use super::arrays::ArrayCandidate;
use super::AnalysisError;
use crate::syntax::{parse, AssignOp, BinaryOp, Node, NodeKind, Span, SyntaxTree};

/// Longest `const x = decoder` chain followed when collecting aliases.
pub const MAX_ALIAS_DEPTH: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alias {
    pub name: String,
    /// Span of the function (or program) the alias is declared in.
    pub scope: Span,
    pub depth: usize,
}

/// The decoder's name together with every local alias of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliasSet {
    pub decoder: String,
    pub aliases: Vec<Alias>,
}

impl AliasSet {
    pub fn resolve(tree: &SyntaxTree, decoder: &str) -> Self {
        // (name, initialiser identifier, declarator span, enclosing scope)
        let mut declarators: Vec<(String, String, Span, Span)> = Vec::new();
        tree.root().walk(&mut |node, ancestors| {
            let NodeKind::VariableDeclarator {
                id,
                init: Some(init),
            } = &node.kind
            else {
                return;
            };
            let (Some(name), Some(source)) = (id.as_identifier(), init.as_identifier()) else {
                return;
            };
            let scope = ancestors
                .iter()
                .rev()
                .find(|a| a.is_function())
                .map_or(tree.root().span, |f| f.span);
            declarators.push((name.to_string(), source.to_string(), node.span, scope));
        });

        let mut set = AliasSet {
            decoder: decoder.to_string(),
            aliases: Vec::new(),
        };
        let mut taken = vec![false; declarators.len()];
        for depth in 1..=MAX_ALIAS_DEPTH {
            let mut round = Vec::new();
            for (i, (name, source, span, scope)) in declarators.iter().enumerate() {
                if !taken[i] && set.refers_to_decoder(source, *span) {
                    taken[i] = true;
                    round.push(Alias {
                        name: name.clone(),
                        scope: *scope,
                        depth,
                    });
                }
            }
            if round.is_empty() {
                break;
            }
            set.aliases.extend(round);
        }
        set
    }

    /// Whether identifier `name`, used at `site`, denotes the decoder.
    pub fn refers_to_decoder(&self, name: &str, site: Span) -> bool {
        name == self.decoder
            || self
                .aliases
                .iter()
                .any(|a| a.name == name && a.scope.contains(site))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.decoder.as_str()).chain(self.aliases.iter().map(|a| a.name.as_str()))
    }
}

/// A non-negative integral literal that fits an index.
pub(crate) fn literal_index(node: &Node) -> Option<u32> {
    let v = node.as_number()?;
    (v.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&v)).then_some(v as u32)
}

/// Finds `param - K` (or `param -= K`) inside the first function of
/// `decoder_text`, where `param` is that function's first parameter.
pub fn subtraction_offset(decoder_text: &str) -> Result<Option<u32>, AnalysisError> {
    let tree = parse(decoder_text).map_err(AnalysisError::DecoderSyntax)?;
    let Some(function) = tree
        .root()
        .descendants()
        .into_iter()
        .find(|n| n.is_function())
    else {
        return Err(AnalysisError::NotAFunction);
    };
    let Some(param) = function.params().first().and_then(Node::as_identifier) else {
        return Ok(None);
    };
    let found = function
        .descendants()
        .into_iter()
        .find_map(|n| match &n.kind {
            NodeKind::BinaryExpression {
                op: BinaryOp::Sub,
                left,
                right,
            } if left.as_identifier() == Some(param) => literal_index(right),
            NodeKind::AssignmentExpression {
                op: AssignOp::SubAssign,
                left,
                right,
            } if left.as_identifier() == Some(param) => literal_index(right),
            _ => None,
        });
    Ok(found)
}

/// Numeric first arguments of every call to the decoder or one of its
/// aliases, in source order.
pub fn decoder_call_indices(tree: &SyntaxTree, aliases: &AliasSet) -> Vec<u32> {
    let mut out = Vec::new();
    tree.root().walk(&mut |node, _| {
        let NodeKind::CallExpression { callee, arguments } = &node.kind else {
            return;
        };
        let Some(name) = callee.as_identifier() else {
            return;
        };
        if aliases.refers_to_decoder(name, node.span) {
            out.extend(arguments.first().and_then(literal_index));
        }
    });
    out
}

/// Smallest literal index any decoder call site passes.
pub fn call_site_offset(tree: &SyntaxTree, decoder_name: &str) -> Option<u32> {
    let aliases = AliasSet::resolve(tree, decoder_name);
    decoder_call_indices(tree, &aliases).into_iter().min()
}

/// The base offset the decoder subtracts from its index argument.
///
/// The structural `param - K` match is preferred. The call-site minimum is
/// used when the decoder has no such subtraction, and otherwise serves as a
/// cross-check: a call site below `K` would index before the table, which
/// is reported as a conflict. A call-site minimum above `K` only means the
/// lowest slots are never referenced.
pub fn decoder_base_offset(
    decoder_text: &str,
    tree: &SyntaxTree,
    decoder_name: &str,
) -> Result<u32, AnalysisError> {
    let structural = subtraction_offset(decoder_text)?;
    let from_calls = call_site_offset(tree, decoder_name);
    match (structural, from_calls) {
        (Some(k), Some(min)) if min < k => Err(AnalysisError::OffsetConflict {
            subtraction: k,
            call_site: min,
        }),
        (Some(k), _) => Ok(k),
        (None, Some(min)) => Ok(min),
        (None, None) => Err(AnalysisError::OffsetNotFound),
    }
}

/// Half-open range of valid decoder indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OffsetRange {
    pub start: u32,
    pub end: u32,
}

impl OffsetRange {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, index: u32) -> bool {
        (self.start..self.end).contains(&index)
    }
}

impl fmt::Display for OffsetRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}..{:#x}", self.start, self.end)
    }
}

pub fn offset_range(base: u32, array: &ArrayCandidate) -> OffsetRange {
    OffsetRange {
        start: base,
        end: base + array.len() as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(len: usize) -> ArrayCandidate {
        ArrayCandidate {
            owner_function: None,
            elements: vec!["s".into(); len],
            element_spans: vec![Span::default(); len],
            span: Span::default(),
            holder_span: Span::default(),
        }
    }

    const DECODER: &str =
        "function a0A(u, A) {\n    u = u - 0x151;\n    const E = a0u();\n    return E[u];\n}";

    #[test]
    fn subtraction_strategy() {
        assert_eq!(subtraction_offset(DECODER).unwrap(), Some(0x151));
        assert_eq!(
            subtraction_offset("b = function (c, d) { c -= 0x0; return a[c]; }").unwrap(),
            Some(0)
        );
        assert_eq!(
            subtraction_offset("function f(i) { return t[i]; }").unwrap(),
            None
        );
        assert!(matches!(
            subtraction_offset("var x = 1;"),
            Err(AnalysisError::NotAFunction)
        ));
    }

    #[test]
    fn fallback_uses_minimum_call_site() {
        let calls: String = (0x151..=0x162)
            .rev()
            .map(|i| format!("  parseInt(h({i:#x}));\n"))
            .collect();
        let src = format!(
            "function a0A(u) {{ return a0u()[u]; }}\nfunction p() {{\n  const h = a0A;\n{calls}}}\n"
        );
        let tree = parse(&src).unwrap();
        let decoder = "function a0A(u) { return a0u()[u]; }";
        assert_eq!(decoder_base_offset(decoder, &tree, "a0A").unwrap(), 0x151);
        assert_eq!(
            offset_range(0x151, &candidate(18)),
            OffsetRange {
                start: 0x151,
                end: 0x163
            }
        );
    }

    #[test]
    fn no_offset_anywhere() {
        let tree = parse("function d(i) { return i; }").unwrap();
        assert!(matches!(
            decoder_base_offset("function d(i) { return i; }", &tree, "d"),
            Err(AnalysisError::OffsetNotFound)
        ));
    }

    #[test]
    fn call_below_base_conflicts() {
        let src = format!("{DECODER}\nfunction p() {{ const h = a0A; return h(0x100); }}");
        let tree = parse(&src).unwrap();
        assert!(matches!(
            decoder_base_offset(DECODER, &tree, "a0A"),
            Err(AnalysisError::OffsetConflict {
                subtraction: 0x151,
                call_site: 0x100
            })
        ));
        // Unreferenced low slots are not a conflict.
        let src = format!("{DECODER}\nfunction p() {{ const h = a0A; return h(0x155); }}");
        let tree = parse(&src).unwrap();
        assert_eq!(decoder_base_offset(DECODER, &tree, "a0A").unwrap(), 0x151);
    }

    #[test]
    fn aliases_are_scoped_and_transitive() {
        let src = "function a() { const h = dec; const k = h; return k(1); }\nfunction b() { const h = other; return h(2); }\nfunction c() { return dec(3); }";
        let tree = parse(src).unwrap();
        let set = AliasSet::resolve(&tree, "dec");
        let names: Vec<&str> = set.names().collect();
        assert_eq!(names, ["dec", "h", "k"]);
        assert_eq!(set.aliases[1].depth, 2);
        assert_eq!(decoder_call_indices(&tree, &set), [1, 3]);
    }

    #[test]
    fn alias_cycles_terminate() {
        let tree = parse("var a = b; var b = a;").unwrap();
        assert!(AliasSet::resolve(&tree, "zzz").aliases.is_empty());
        let tree = parse("var a = d; var b = a; var a2 = b; var c = a2; var e = c; var f = e; var g = f; var h = g; var i = h; var j = i;").unwrap();
        assert_eq!(AliasSet::resolve(&tree, "d").aliases.len(), MAX_ALIAS_DEPTH);
    }

    #[test]
    fn range_arithmetic() {
        assert_eq!(
            offset_range(0, &candidate(1)),
            OffsetRange { start: 0, end: 1 }
        );
        assert_eq!(
            offset_range(0xea, &candidate(5)),
            OffsetRange {
                start: 0xea,
                end: 0xef
            }
        );
        assert_eq!(offset_range(0x151, &candidate(18)).len(), 18);
    }
}
