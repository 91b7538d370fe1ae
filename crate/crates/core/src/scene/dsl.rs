//! Parser for `.scene` files.
//!
//! ```text
//! scene "catenoid" {
//!   ambient 3; dim 2;
//!   chart {
//!     params (t, s);
//!     domain { t in (-inf, inf) grows cosh(t); s in (-pi, pi) };
//!     map (cosh(t)*cos(s), cosh(t)*sin(s), t)
//!   }
//!   meta { definable=false; minimal=true; monotone_at=(1,0,0) }
//! }
//! ```
//!
//! Other statements: `overlap disjoint|declared;`, `weight <w>;` inside a
//! chart, `exclude ball((c..), r)` and `within ball((c..), r)` inside a domain,
//! and `builtin <name>(<args>);` in place of charts.

use super::builtins::builtin_scene;
use super::chart::Chart;
use super::region::Region;
use super::staircase::StaircaseSet;
use super::{Body, OverlapPolicy, Scene, SceneError, SceneMeta};
use crate::expr::lexer::{tokenize, TokenKind};
use crate::expr::parser::{Cursor, ExprParser, VarPolicy};
use crate::expr::{Expr, ParseError, Tape, VecExpr};

pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let tokens = tokenize(text).map_err(|e| located(text, e.offset, format!("unexpected character {:?}", e.ch)))?;
    let mut cur = Cursor::new(&tokens);
    let mut p = SceneParser { text, cur: &mut cur };
    let scene = p.scene()?;
    scene.validate()?;
    Ok(scene)
}

fn located(text: &str, offset: usize, message: String) -> SceneError {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    SceneError::Parse { line, column, message }
}

struct SceneParser<'a, 'c> {
    text: &'a str,
    cur: &'c mut Cursor<'a>,
}

enum BodyDecl {
    Charts(Vec<Chart>),
    Builtin(Scene),
}

impl SceneParser<'_, '_> {
    fn err(&self, e: ParseError) -> SceneError {
        located(self.text, e.offset(), e.to_string())
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SceneError> {
        Err(self.err(self.cur.error(expected)))
    }

    fn expect(&mut self, kind: TokenKind, label: &str) -> Result<(), SceneError> {
        self.cur.expect(&kind, label).map_err(|e| self.err(e))
    }

    fn keyword(&mut self, word: &str) -> Result<(), SceneError> {
        if self.peek_ident() == Some(word) {
            self.cur.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{word}`")])
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.cur.peek() {
            TokenKind::Ident(s) => Some(s.as_str()),
            _ => None,
        }
    }

    fn ident(&mut self) -> Result<String, SceneError> {
        match self.cur.peek().clone() {
            TokenKind::Ident(s) => {
                self.cur.bump();
                Ok(s)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn semis(&mut self) {
        while self.cur.eat(&TokenKind::Semi) {}
    }

    fn expr(&mut self, vars: &[String]) -> Result<Expr, SceneError> {
        let mut p = ExprParser {
            cursor: &mut *self.cur,
            vars: VarPolicy::Only(vars),
        };
        p.expr().map_err(|e| located(self.text, e.offset(), e.to_string()))
    }

    fn constant(&mut self) -> Result<f64, SceneError> {
        let offset = self.cur.offset();
        let e = self.expr(&[])?;
        let v = Tape::compile_exprs(&[e], &[])
            .and_then(|t| t.eval(&[]))
            .map_err(|err| located(self.text, offset, err.to_string()))?[0];
        if !v.is_finite() {
            return Err(located(self.text, offset, "constant is not finite".into()));
        }
        Ok(v)
    }

    /// Constant expression or `inf` / `-inf`.
    fn bound(&mut self) -> Result<f64, SceneError> {
        let neg = matches!(self.cur.peek(), TokenKind::Minus)
            && matches!(self.cur.peek_at(1), TokenKind::Ident(s) if s == "inf");
        if neg {
            self.cur.bump();
        }
        if self.peek_ident() == Some("inf") {
            self.cur.bump();
            return Ok(if neg { f64::NEG_INFINITY } else { f64::INFINITY });
        }
        self.constant()
    }

    fn integer(&mut self) -> Result<usize, SceneError> {
        match *self.cur.peek() {
            TokenKind::Number(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e6 => {
                self.cur.bump();
                Ok(v as usize)
            }
            _ => self.fail(&["non-negative integer"]),
        }
    }

    fn tuple(&mut self) -> Result<Vec<f64>, SceneError> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut out = vec![self.constant()?];
        while self.cur.eat(&TokenKind::Comma) {
            out.push(self.constant()?);
        }
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(out)
    }

    fn boolean(&mut self) -> Result<bool, SceneError> {
        match self.peek_ident() {
            Some("true") => {
                self.cur.bump();
                Ok(true)
            }
            Some("false") => {
                self.cur.bump();
                Ok(false)
            }
            _ => self.fail(&["`true`", "`false`"]),
        }
    }

    fn scene(&mut self) -> Result<Scene, SceneError> {
        self.keyword("scene")?;
        let name = match self.cur.peek().clone() {
            TokenKind::Str(s) => {
                self.cur.bump();
                s
            }
            _ => return self.fail(&["scene name string"]),
        };
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut ambient = None;
        let mut dim = None;
        let mut overlap = OverlapPolicy::Disjoint;
        let mut body: Option<BodyDecl> = None;
        let mut meta: Option<SceneMeta> = None;
        let start_of = |p: &Self| p.cur.offset();
        loop {
            self.semis();
            if self.cur.eat(&TokenKind::RBrace) {
                break;
            }
            let at = start_of(self);
            match self.peek_ident() {
                Some("ambient") => {
                    self.cur.bump();
                    ambient = Some(self.integer()?);
                }
                Some("dim") => {
                    self.cur.bump();
                    dim = Some(self.integer()?);
                }
                Some("overlap") => {
                    self.cur.bump();
                    overlap = match self.ident()?.as_str() {
                        "disjoint" => OverlapPolicy::Disjoint,
                        "declared" => OverlapPolicy::Declared,
                        other => {
                            return Err(located(
                                self.text,
                                at,
                                format!("unknown overlap policy `{other}`"),
                            ))
                        }
                    };
                }
                Some("chart") => {
                    self.cur.bump();
                    let chart = self.chart()?;
                    match &mut body {
                        None => body = Some(BodyDecl::Charts(vec![chart])),
                        Some(BodyDecl::Charts(c)) => c.push(chart),
                        Some(BodyDecl::Builtin(_)) => {
                            return Err(located(self.text, at, "charts and a builtin cannot be mixed".into()))
                        }
                    }
                }
                Some("builtin") => {
                    self.cur.bump();
                    if body.is_some() {
                        return Err(located(self.text, at, "charts and a builtin cannot be mixed".into()));
                    }
                    body = Some(BodyDecl::Builtin(self.builtin()?));
                }
                Some("meta") => {
                    self.cur.bump();
                    meta = Some(self.meta()?);
                }
                _ => return self.fail(&["`ambient`", "`dim`", "`overlap`", "`chart`", "`builtin`", "`meta`", "`}`"]),
            }
        }
        self.semis();
        if *self.cur.peek() != TokenKind::Eof {
            return self.fail(&["end of input"]);
        }
        let end = self.text.len();
        let ambient = ambient.ok_or_else(|| located(self.text, end, "missing `ambient`".into()))?;
        let dim = dim.ok_or_else(|| located(self.text, end, "missing `dim`".into()))?;
        let (body, inherited) = match body {
            None => return Err(located(self.text, end, "scene needs a chart or a builtin".into())),
            Some(BodyDecl::Charts(c)) => (Body::Charts(c), None),
            Some(BodyDecl::Builtin(s)) => {
                if s.ambient_dim != ambient || s.dim != dim {
                    return Err(SceneError::DimensionMismatch(format!(
                        "builtin `{}` has ambient {} and dim {}, scene declares {} and {}",
                        s.name, s.ambient_dim, s.dim, ambient, dim
                    )));
                }
                (s.body, Some(s.meta))
            }
        };
        Ok(Scene {
            name,
            ambient_dim: ambient,
            dim,
            body,
            overlap,
            meta: meta.or(inherited).unwrap_or_default(),
            source: self.text.to_string(),
        })
    }

    fn builtin(&mut self) -> Result<Scene, SceneError> {
        let offset = self.cur.offset();
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.cur.eat(&TokenKind::LParen)
            && !self.cur.eat(&TokenKind::RParen) {
                args.push(self.constant()?);
                while self.cur.eat(&TokenKind::Comma) {
                    args.push(self.constant()?);
                }
                self.expect(TokenKind::RParen, "`)`")?;
            }
        if name == "staircase" {
            let a1 = match args.as_slice() {
                [a] => *a,
                _ => return Err(located(self.text, offset, "staircase takes one argument".into())),
            };
            let set = StaircaseSet::new(a1)
                .ok_or_else(|| SceneError::Invalid(format!("staircase needs a1 > 0, got {a1}")))?;
            return Ok(Scene {
                name,
                ambient_dim: 2,
                dim: 1,
                body: Body::Staircase(set),
                overlap: OverlapPolicy::Disjoint,
                meta: SceneMeta::default(),
                source: String::new(),
            });
        }
        let call = if args.is_empty() {
            name.clone()
        } else {
            let list: Vec<String> = args.iter().map(|a| format!("{a:?}")).collect();
            format!("{name}({})", list.join(", "))
        };
        builtin_scene(&call).map_err(|e| match e {
            SceneError::UnknownBuiltin(n) => located(self.text, offset, format!("unknown builtin `{n}`")),
            other => other,
        })
    }

    fn chart(&mut self) -> Result<Chart, SceneError> {
        let chart_at = self.cur.offset();
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut params: Option<Vec<String>> = None;
        let mut axes: Vec<(String, f64, f64, Option<Expr>, usize)> = Vec::new();
        let mut extra: Vec<Region> = Vec::new();
        let mut map: Option<Vec<Expr>> = None;
        let mut weight = 1.0;
        loop {
            self.semis();
            if self.cur.eat(&TokenKind::RBrace) {
                break;
            }
            match self.peek_ident() {
                Some("params") => {
                    self.cur.bump();
                    self.expect(TokenKind::LParen, "`(`")?;
                    let mut ps = vec![self.ident()?];
                    while self.cur.eat(&TokenKind::Comma) {
                        ps.push(self.ident()?);
                    }
                    self.expect(TokenKind::RParen, "`)`")?;
                    params = Some(ps);
                }
                Some("domain") => {
                    self.cur.bump();
                    let ps = match &params {
                        Some(p) => p.clone(),
                        None => return Err(located(self.text, self.cur.offset(), "`params` must come before `domain`".into())),
                    };
                    self.domain(&ps, &mut axes, &mut extra)?;
                }
                Some("map") => {
                    self.cur.bump();
                    let ps = match &params {
                        Some(p) => p.clone(),
                        None => return Err(located(self.text, self.cur.offset(), "`params` must come before `map`".into())),
                    };
                    self.expect(TokenKind::LParen, "`(`")?;
                    let mut comps = vec![self.expr(&ps)?];
                    while self.cur.eat(&TokenKind::Comma) {
                        comps.push(self.expr(&ps)?);
                    }
                    self.expect(TokenKind::RParen, "`)`")?;
                    map = Some(comps);
                }
                Some("weight") => {
                    self.cur.bump();
                    weight = self.constant()?;
                }
                _ => return self.fail(&["`params`", "`domain`", "`map`", "`weight`", "`}`"]),
            }
        }
        let params = params.ok_or_else(|| located(self.text, chart_at, "chart without `params`".into()))?;
        let map = map.ok_or_else(|| located(self.text, chart_at, "chart without `map`".into()))?;
        let d = params.len();
        let mut lo = vec![f64::NEG_INFINITY; d];
        let mut hi = vec![f64::INFINITY; d];
        let mut growth = vec![None; d];
        let mut seen = vec![false; d];
        for (name, l, h, g, at) in axes {
            let i = params.iter().position(|p| *p == name).unwrap();
            if seen[i] {
                return Err(located(self.text, at, format!("parameter `{name}` constrained twice")));
            }
            seen[i] = true;
            lo[i] = l;
            hi[i] = h;
            growth[i] = g;
        }
        let rect = Region::Rect { lo, hi };
        let domain = if extra.is_empty() {
            rect
        } else {
            let mut parts = vec![rect];
            parts.extend(extra);
            Region::Intersection(parts)
        };
        Chart::new(params.clone(), domain, VecExpr::new(params, map), growth, weight).map_err(|e| match e {
            SceneError::Invalid(m) => located(self.text, chart_at, m),
            other => other,
        })
    }

    fn domain(
        &mut self,
        params: &[String],
        axes: &mut Vec<(String, f64, f64, Option<Expr>, usize)>,
        extra: &mut Vec<Region>,
    ) -> Result<(), SceneError> {
        self.expect(TokenKind::LBrace, "`{`")?;
        loop {
            self.semis();
            if self.cur.eat(&TokenKind::RBrace) {
                return Ok(());
            }
            let at = self.cur.offset();
            match self.peek_ident() {
                Some(word @ ("exclude" | "within")) => {
                    let complement = word == "exclude";
                    self.cur.bump();
                    self.keyword("ball")?;
                    self.expect(TokenKind::LParen, "`(`")?;
                    let center = self.tuple()?;
                    self.expect(TokenKind::Comma, "`,`")?;
                    let radius = self.constant()?;
                    self.expect(TokenKind::RParen, "`)`")?;
                    if center.len() != params.len() {
                        return Err(SceneError::DimensionMismatch(format!(
                            "ball center has {} coordinates, chart has {} parameters",
                            center.len(),
                            params.len()
                        )));
                    }
                    extra.push(if complement {
                        Region::BallComplement { center, radius }
                    } else {
                        Region::Ball { center, radius }
                    });
                }
                Some(name) if params.iter().any(|p| p == name) => {
                    let name = name.to_string();
                    self.cur.bump();
                    self.keyword("in")?;
                    self.expect(TokenKind::LParen, "`(`")?;
                    let lo = self.bound()?;
                    self.expect(TokenKind::Comma, "`,`")?;
                    let hi = self.bound()?;
                    self.expect(TokenKind::RParen, "`)`")?;
                    let growth = if self.peek_ident() == Some("grows") {
                        self.cur.bump();
                        Some(self.expr(std::slice::from_ref(&name))?)
                    } else {
                        None
                    };
                    axes.push((name, lo, hi, growth, at));
                }
                Some(other) => {
                    let other = other.to_string();
                    return Err(located(self.text, at, format!("`{other}` is not a chart parameter")));
                }
                None => return self.fail(&["parameter name", "`exclude`", "`within`", "`}`"]),
            }
        }
    }

    fn meta(&mut self) -> Result<SceneMeta, SceneError> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut meta = SceneMeta::default();
        loop {
            self.semis();
            if self.cur.eat(&TokenKind::RBrace) {
                return Ok(meta);
            }
            let at = self.cur.offset();
            let key = self.ident()?;
            self.expect(TokenKind::Eq, "`=`")?;
            match key.as_str() {
                "definable" => meta.definable = self.boolean()?,
                "minimal" => meta.minimal = self.boolean()?,
                "cone_vertex" => meta.cone_vertex = Some(self.tuple()?),
                "monotone_at" => meta.monotone_at = Some(self.tuple()?),
                "degree" => meta.degree = Some(self.integer()? as u32),
                _ => return Err(located(self.text, at, format!("unknown meta key `{key}`"))),
            }
        }
    }
}
