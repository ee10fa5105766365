//! Recursive-descent parser for the rule DSL.
//!
//! ```text
//! file        := decl*
//! decl        := generic | instance | cornerstone
//! generic     := ID 'ako' ID (',' ID)* 'with' slot*
//! slot        := ID ':' facet*
//! facet       := 'range' '[' ATOM (',' ATOM)* ']'
//!              | 'value' ATOM
//!              | 'if_needed' rule [';']
//!              | 'if_replaced' 'rdr_frame' '(' '[' ID,* ']' ')'
//! instance    := 'frame' '(' ID ',' '[' ID,* ']' ',' '[' (ID ':' ATOM),* ']' ')' ';'
//! cornerstone := 'cornerstone' CASE 'for' ID '.' ID 'at' NUM (ID ':' ATOM)*
//! rule        := 'if' cond 'then' ATOM ['because' CASE] ['except' rule] ['else' rule]
//! cond        := 'true' | lit ('and' lit)*
//! lit         := 'this' ID '==' ATOM | VAR '==' ATOM
//! CASE        := ID ['(' CASE (',' CASE)* ')']
//! ```
//!
//! An `else` belongs to the innermost open rule whose `if` starts at or left
//! of the `else` keyword's column, so indentation decides between a rule's
//! own alternative and that of its last exception.

use std::collections::BTreeMap;

use indexmap::IndexMap;

use super::lexer::{tokenize, Tok, Token};
use super::{Frame, FrameKind, KbError, Slot};
use crate::atom::{is_identifier, Atom};
use crate::rdr::{Case, Condition, Literal, NodeId, Operand, RdrNode, RdrTree};

pub(crate) struct CornerstoneDecl {
    pub owner: String,
    pub slot: String,
    pub case: Case,
    pub line: usize,
}

pub(crate) struct ParsedSource {
    pub frames: Vec<Frame>,
    pub cornerstones: Vec<CornerstoneDecl>,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Self, KbError> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    pub fn parse_source(mut self) -> Result<ParsedSource, KbError> {
        let mut frames = Vec::new();
        let mut cornerstones = Vec::new();
        while self.pos < self.toks.len() {
            match (self.peek(0), self.peek(1)) {
                (Some(Tok::Word(w)), Some(Tok::LParen)) if w == "frame" => frames.push(self.instance()?),
                (Some(Tok::Word(w)), Some(Tok::Word(_))) if w == "cornerstone" => {
                    cornerstones.push(self.cornerstone()?)
                }
                (Some(Tok::Word(_)), Some(Tok::Word(w))) if w == "ako" => frames.push(self.generic()?),
                _ => return Err(self.error("expected a frame, instance or cornerstone declaration")),
            }
        }
        Ok(ParsedSource { frames, cornerstones })
    }

    /// Parses a standalone rule tree. Non-root cornerstones stay unresolved.
    pub fn parse_tree(mut self) -> Result<RdrTree, KbError> {
        let tree = self.rule_tree()?;
        self.eat(&Tok::Semi);
        if self.pos < self.toks.len() {
            return Err(self.error("unexpected input after rule"));
        }
        Ok(tree)
    }

    fn peek(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn error(&self, message: &str) -> KbError {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col + 1),
            None => (1, 1),
        };
        let found = match self.peek(0) {
            Some(Tok::Word(w)) => format!(", found `{w}`"),
            Some(t) => format!(", found {t:?}"),
            None => ", found end of input".to_string(),
        };
        KbError::Syntax {
            line,
            col,
            message: format!("{message}{found}"),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek(0) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), KbError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(0), Some(Tok::Word(w)) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), KbError> {
        if self.is_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{kw}`")))
        }
    }

    fn word(&mut self, what: &str) -> Result<String, KbError> {
        match self.peek(0) {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(&format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, KbError> {
        let w = self.word(what)?;
        if is_identifier(&w) {
            Ok(w)
        } else {
            self.pos -= 1;
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn atom(&mut self) -> Result<Atom, KbError> {
        self.word("an atom").map(Atom::from)
    }

    fn at_slot_start(&self) -> bool {
        matches!((self.peek(0), self.peek(1)), (Some(Tok::Word(_)), Some(Tok::Colon)))
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, KbError>) -> Result<Vec<T>, KbError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(&Tok::RBracket) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `]`")?;
        }
    }

    fn generic(&mut self) -> Result<Frame, KbError> {
        let id = self.ident("a frame name")?;
        self.keyword("ako")?;
        let mut parents = vec![self.ident("a parent frame")?];
        while self.eat(&Tok::Comma) {
            parents.push(self.ident("a parent frame")?);
        }
        self.keyword("with")?;
        let mut slots = IndexMap::new();
        while self.at_slot_start() {
            let line = self.toks[self.pos].line;
            let name = self.ident("a slot name")?;
            self.expect(Tok::Colon, "`:`")?;
            let slot = self.facets()?;
            if slots.insert(name.clone(), slot).is_some() {
                return Err(KbError::Syntax {
                    line,
                    col: 1,
                    message: format!("slot `{name}` declared twice in `{id}`"),
                });
            }
        }
        Ok(Frame {
            id,
            kind: FrameKind::Generic,
            parents,
            slots,
        })
    }

    fn facets(&mut self) -> Result<Slot, KbError> {
        let mut slot = Slot::default();
        loop {
            let facet = match self.peek(0) {
                Some(Tok::Word(w)) if !self.at_slot_start() => w.clone(),
                _ => break,
            };
            let duplicate = match facet.as_str() {
                "range" => {
                    self.pos += 1;
                    let atoms = self.list(Self::atom)?;
                    if atoms.is_empty() {
                        return Err(self.error("a range needs at least one atom"));
                    }
                    slot.range.replace(atoms).is_some()
                }
                "value" => {
                    self.pos += 1;
                    let v = self.atom()?;
                    slot.value.replace(v).is_some()
                }
                "if_needed" => {
                    self.pos += 1;
                    let tree = self.rule_tree()?;
                    self.eat(&Tok::Semi);
                    slot.if_needed.replace(tree).is_some()
                }
                "if_replaced" => {
                    self.pos += 1;
                    self.keyword("rdr_frame")?;
                    self.expect(Tok::LParen, "`(`")?;
                    let names = self.list(|p| p.ident("a slot name"))?;
                    self.expect(Tok::RParen, "`)`")?;
                    slot.if_replaced.replace(names).is_some()
                }
                _ => break,
            };
            if duplicate {
                self.pos -= 1;
                return Err(self.error(&format!("duplicate `{facet}` facet")));
            }
        }
        Ok(slot)
    }

    fn instance(&mut self) -> Result<Frame, KbError> {
        self.keyword("frame")?;
        self.expect(Tok::LParen, "`(`")?;
        let id = self.ident("an instance id")?;
        self.expect(Tok::Comma, "`,`")?;
        let parents = self.list(|p| p.ident("a parent frame"))?;
        self.expect(Tok::Comma, "`,`")?;
        let pairs = self.list(|p| {
            let k = p.ident("a slot name")?;
            p.expect(Tok::Colon, "`:`")?;
            Ok((k, p.atom()?))
        })?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Semi, "`;`")?;
        let mut slots = IndexMap::new();
        for (k, v) in pairs {
            if slots.contains_key(&k) {
                return Err(self.error(&format!("slot `{k}` assigned twice in `{id}`")));
            }
            slots.insert(
                k,
                Slot {
                    value: Some(v),
                    ..Slot::default()
                },
            );
        }
        Ok(Frame {
            id,
            kind: FrameKind::Instance,
            parents,
            slots,
        })
    }

    fn cornerstone(&mut self) -> Result<CornerstoneDecl, KbError> {
        let line = self.toks[self.pos].line;
        self.keyword("cornerstone")?;
        let id = self.case_id()?;
        self.keyword("for")?;
        let owner = self.ident("a frame name")?;
        self.expect(Tok::Dot, "`.`")?;
        let slot = self.ident("a slot name")?;
        self.keyword("at")?;
        let at = self.word("a time step")?;
        let created_at = at.parse::<u64>().map_err(|_| {
            self.pos -= 1;
            self.error("expected a time step")
        })?;
        let mut case = Case::new(id, created_at);
        while self.at_slot_start() {
            let k = self.word("a slot name")?;
            self.expect(Tok::Colon, "`:`")?;
            let v = self.atom()?;
            if case.bindings.insert(k.clone(), v).is_some() {
                return Err(self.error(&format!("`{k}` bound twice in cornerstone")));
            }
        }
        Ok(CornerstoneDecl {
            owner,
            slot,
            case,
            line,
        })
    }

    fn case_id(&mut self) -> Result<String, KbError> {
        let mut id = self.word("a case id")?;
        if self.eat(&Tok::LParen) {
            let mut args = vec![self.case_id()?];
            while self.eat(&Tok::Comma) {
                args.push(self.case_id()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            id = format!("{id}({})", args.join(", "));
        }
        Ok(id)
    }

    fn rule_tree(&mut self) -> Result<RdrTree, KbError> {
        let mut nodes = Vec::new();
        let root = self.rule(&mut nodes, true)?;
        let mut cornerstones = BTreeMap::new();
        if let Some(id) = &nodes[root.0].cornerstone {
            cornerstones.insert(id.clone(), Case::new(id.clone(), 0));
        }
        Ok(RdrTree::from_parts(nodes, root, cornerstones))
    }

    fn rule(&mut self, nodes: &mut Vec<RdrNode>, is_root: bool) -> Result<NodeId, KbError> {
        let if_col = match self.toks.get(self.pos) {
            Some(t) if t.tok == Tok::Word("if".into()) => t.col,
            _ => return Err(self.error("expected `if`")),
        };
        self.pos += 1;
        let condition = self.condition()?;
        match (&condition, is_root) {
            (Condition::True, false) => return Err(self.error("only the root rule may use `true`")),
            (Condition::All(_), true) => return Err(self.error("the root rule must be `if true`")),
            _ => {}
        }
        self.keyword("then")?;
        let conclusion = self.atom()?;
        let cornerstone = if self.is_keyword("because") {
            self.pos += 1;
            Some(self.case_id()?)
        } else if is_root {
            None
        } else {
            return Err(self.error("expected `because`"));
        };
        let id = NodeId(nodes.len());
        nodes.push(RdrNode {
            condition,
            conclusion,
            cornerstone,
            except: None,
            alternative: None,
        });
        if self.is_keyword("except") {
            self.pos += 1;
            let child = self.rule(nodes, false)?;
            nodes[id.0].except = Some(child);
        }
        if let Some(t) = self.toks.get(self.pos) {
            if t.tok == Tok::Word("else".into()) && t.col >= if_col {
                if is_root {
                    return Err(self.error("the root rule cannot have an `else`"));
                }
                self.pos += 1;
                let alt = self.rule(nodes, false)?;
                nodes[id.0].alternative = Some(alt);
            }
        }
        Ok(id)
    }

    fn condition(&mut self) -> Result<Condition, KbError> {
        if self.is_keyword("true") {
            self.pos += 1;
            return Ok(Condition::True);
        }
        let mut lits = vec![self.literal()?];
        while self.is_keyword("and") {
            self.pos += 1;
            lits.push(self.literal()?);
        }
        Ok(Condition::All(lits))
    }

    fn literal(&mut self) -> Result<Literal, KbError> {
        let operand = if self.is_keyword("this") {
            self.pos += 1;
            let slot = self.ident("a slot name")?;
            match Operand::for_key(&slot) {
                op @ Operand::This(_) => op,
                Operand::Var(_) => {
                    self.pos -= 1;
                    return Err(self.error("slot names after `this` start in lowercase"));
                }
            }
        } else {
            let var = self.ident("`this` or a variable")?;
            match Operand::for_key(&var) {
                op @ Operand::Var(_) => op,
                Operand::This(_) => {
                    self.pos -= 1;
                    return Err(self.error("expected `this` or a capitalised variable"));
                }
            }
        };
        self.expect(Tok::EqEq, "`==`")?;
        Ok(Literal {
            operand,
            value: self.atom()?,
        })
    }
}
