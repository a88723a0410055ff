use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::render::{answering_input, qa_pairs, reasoning_input, render_context};
use super::{Answer, PipelineError, RetrievalRecord, Retriever, TraceEvent};
use crate::gateway::{ChatRequest, ModelGateway};
use crate::graph::GraphStore;
use crate::ingest::{ask_structured, StructuredError};
use crate::prompts::Prompt;
use crate::retrieval::{Context, RetrievalConfig};

pub const DEFAULT_MAX_STEPS: usize = 3;

/// One iteration of the reasoning loop as reported by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotStep {
    pub provided_context: String,
    pub answer_possible: bool,
    pub final_answer: String,
    pub additional_question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subquestion {
    pub id: usize,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub original_question: String,
    pub subquestions: Vec<Subquestion>,
}

impl Decomposition {
    pub fn single(query: &str) -> Self {
        Decomposition {
            original_question: query.to_string(),
            subquestions: vec![Subquestion {
                id: 1,
                question: query.to_string(),
            }],
        }
    }
}

/// Accumulates the trace of one pipeline invocation.
struct Run<'g> {
    gateway: &'g dyn ModelGateway,
    trace: Vec<TraceEvent>,
}

impl<'g> Run<'g> {
    fn new(gateway: &'g dyn ModelGateway) -> Self {
        Run {
            gateway,
            trace: Vec::new(),
        }
    }

    fn fail(&mut self, mut e: PipelineError) -> PipelineError {
        let mut trace = std::mem::take(&mut self.trace);
        trace.append(&mut e.trace);
        e.trace = trace;
        e
    }

    fn retrieve<R: Retriever + ?Sized>(
        &mut self,
        retriever: &R,
        purpose: &str,
        query: &str,
    ) -> Result<Context, PipelineError> {
        let context = retriever
            .retrieve(self.gateway, query)
            .map_err(|e| self.fail(e))?;
        self.trace.push(TraceEvent::Retrieval(RetrievalRecord::new(
            purpose, query, &context,
        )));
        Ok(context)
    }

    /// Structured call; `Ok(Err(raw))` when the output stayed unusable after
    /// the repair attempt.
    fn ask<T>(
        &mut self,
        prompt: Prompt,
        purpose: &str,
        user_prompt: String,
        interpret: impl Fn(Value) -> Result<T, String>,
    ) -> Result<Result<T, String>, PipelineError> {
        let request = ChatRequest::new(prompt.text(), user_prompt);
        let mut calls = Vec::new();
        let result = ask_structured(self.gateway, purpose, &request, &mut calls, interpret);
        self.trace.extend(
            calls
                .into_iter()
                .map(|call| TraceEvent::Model { prompt, call }),
        );
        match result {
            Ok(v) => Ok(Ok(v)),
            Err(StructuredError::Unparseable { raw_output, .. }) => Ok(Err(raw_output)),
            Err(StructuredError::Gateway(e)) => Err(self.fail(e.into())),
        }
    }

    /// Answering call; unusable output becomes the final answer verbatim.
    fn answer(
        &mut self,
        prompt: Prompt,
        purpose: &str,
        user_prompt: String,
    ) -> Result<(String, String), PipelineError> {
        Ok(self
            .ask(prompt, purpose, user_prompt, interpret_answer)?
            .unwrap_or_else(|raw| (String::new(), raw.trim().to_string())))
    }

    fn finish(self, reasoning: String, final_answer: String) -> Answer {
        Answer::new(reasoning, final_answer, self.trace)
    }
}

fn as_text(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

fn object(v: Value, expected: &str) -> Result<Map<String, Value>, String> {
    match v {
        Value::Object(obj) => Ok(obj),
        _ => Err(format!("expected a JSON object with {expected}")),
    }
}

fn interpret_answer(v: Value) -> Result<(String, String), String> {
    let obj = object(v, "'reasoning' and 'final_answer'")?;
    let final_answer = as_text(obj.get("final_answer")).ok_or("missing 'final_answer'")?;
    Ok((
        as_text(obj.get("reasoning")).unwrap_or_default(),
        final_answer,
    ))
}

fn interpret_step(v: Value) -> Result<CotStep, String> {
    let obj = object(v, "'provided_context' and 'answer_possible'")?;
    let answer_possible = match obj.get("answer_possible") {
        Some(Value::Bool(b)) => *b,
        Some(Value::String(s)) if s.eq_ignore_ascii_case("true") => true,
        Some(Value::String(s)) if s.eq_ignore_ascii_case("false") => false,
        _ => return Err("'answer_possible' must be true or false".into()),
    };
    let step = CotStep {
        provided_context: as_text(obj.get("provided_context")).unwrap_or_default(),
        answer_possible,
        final_answer: as_text(obj.get("final_answer")).unwrap_or_default(),
        additional_question: as_text(obj.get("additional_question")).unwrap_or_default(),
    };
    if step.answer_possible && step.final_answer.is_empty() {
        return Err("'answer_possible' is true but 'final_answer' is empty".into());
    }
    if !step.answer_possible && step.additional_question.is_empty() {
        return Err("'answer_possible' is false but 'additional_question' is empty".into());
    }
    Ok(step)
}

fn interpret_decomposition(query: &str) -> impl Fn(Value) -> Result<Decomposition, String> + '_ {
    move |v| {
        let mut obj = object(v, "'subquestions'")?;
        let Some(Value::Array(items)) = obj.remove("subquestions") else {
            return Err("missing 'subquestions' list".into());
        };
        let mut subquestions = Vec::new();
        for item in items {
            let question = match &item {
                Value::Object(o) => as_text(o.get("question")),
                Value::String(s) => Some(s.trim().to_string()),
                _ => None,
            }
            .filter(|q| !q.is_empty())
            .ok_or_else(|| format!("subquestion without text: {item}"))?;
            subquestions.push(Subquestion {
                id: subquestions.len() + 1,
                question,
            });
        }
        if subquestions.is_empty() {
            return Err("empty 'subquestions' list".into());
        }
        Ok(Decomposition {
            original_question: as_text(obj.get("original_question"))
                .filter(|q| !q.is_empty())
                .unwrap_or_else(|| query.to_string()),
            subquestions,
        })
    }
}

/// One retrieval, one answering call.
pub fn answer_single<R: Retriever + ?Sized>(
    gateway: &dyn ModelGateway,
    retriever: &R,
    query: &str,
) -> Result<Answer, PipelineError> {
    let mut run = Run::new(gateway);
    let context = run.retrieve(retriever, "answer", query)?;
    let (reasoning, final_answer) = run.answer(
        retriever.answering_prompt(),
        "answer",
        answering_input(query, &context),
    )?;
    Ok(run.finish(reasoning, final_answer))
}

/// Similarity-only baseline: top-`k` chunks of the chunk store.
pub fn answer_naive(
    gateway: &dyn ModelGateway,
    chunk_store: &GraphStore,
    k: usize,
    query: &str,
) -> Result<Answer, PipelineError> {
    answer_single(
        gateway,
        &super::ChunkRetriever {
            store: chunk_store,
            k,
        },
        query,
    )
}

/// Single activation-based retrieval over the knowledge graph.
pub fn answer_sa(
    gateway: &dyn ModelGateway,
    store: &GraphStore,
    config: &RetrievalConfig,
    query: &str,
) -> Result<Answer, PipelineError> {
    answer_single(
        gateway,
        &super::SaRetriever {
            store,
            config: *config,
        },
        query,
    )
}

/// Iterative retrieval driven by the model's follow-up questions.
///
/// The summary returned at each step is carried into the next one. If no
/// step declares the question answerable, a final answering call runs over
/// the last summary and the last retrieved context. A step whose output
/// stays unusable is counted and the next step reuses the same question.
pub fn answer_cot<R: Retriever + ?Sized>(
    gateway: &dyn ModelGateway,
    retriever: &R,
    query: &str,
    max_steps: usize,
) -> Result<Answer, PipelineError> {
    let mut run = Run::new(gateway);
    let mut memory = String::new();
    let mut current = query.to_string();
    let mut last_context = Context::default();
    for step in 1..=max_steps.max(1) {
        let purpose = format!("cot-step-{step}");
        let context = run.retrieve(retriever, &purpose, &current)?;
        let outcome = run.ask(
            retriever.reasoning_prompt(),
            &purpose,
            reasoning_input(query, &memory, &context),
            interpret_step,
        )?;
        if let Ok(s) = outcome {
            if s.answer_possible {
                return Ok(run.finish(s.provided_context, s.final_answer));
            }
            if !s.provided_context.is_empty() {
                memory = s.provided_context;
            }
            current = s.additional_question;
        }
        last_context = context;
    }
    let (reasoning, final_answer) = run.answer(
        retriever.answering_prompt(),
        "cot-final",
        reasoning_input(query, &memory, &last_context),
    )?;
    Ok(run.finish(reasoning, final_answer))
}

fn decompose_in(run: &mut Run<'_>, query: &str) -> Result<Decomposition, PipelineError> {
    Ok(run
        .ask(
            Prompt::Decomposition,
            "decompose",
            query.to_string(),
            interpret_decomposition(query),
        )?
        .unwrap_or_else(|_| Decomposition::single(query)))
}

/// Splits a question into ordered subquestions; falls back to the question
/// itself when the model output is unusable.
pub fn decompose(gateway: &dyn ModelGateway, query: &str) -> Result<Decomposition, PipelineError> {
    decompose_in(&mut Run::new(gateway), query)
}

/// Answers the subquestions in order, each retrieved with the earlier
/// question/answer pairs prepended, then answers the original question
/// from all pairs plus one more retrieval on the original question.
pub fn answer_decomposition<R: Retriever + ?Sized>(
    gateway: &dyn ModelGateway,
    retriever: &R,
    query: &str,
) -> Result<Answer, PipelineError> {
    let mut run = Run::new(gateway);
    let decomposition = decompose_in(&mut run, query)?;
    let mut pairs: Vec<(String, String)> = Vec::new();
    for sq in &decomposition.subquestions {
        let purpose = format!("subquestion-{}", sq.id);
        let retrieval_query = format!("{}{}", qa_pairs(&pairs), sq.question);
        let context = run.retrieve(retriever, &purpose, &retrieval_query)?;
        let (_, answer) = run.answer(
            retriever.answering_prompt(),
            &purpose,
            answering_input(&sq.question, &context),
        )?;
        pairs.push((sq.question.clone(), answer));
    }
    let context = run.retrieve(retriever, "final", query)?;
    let user_prompt = format!(
        "Question: {query}\n\nAnswered subquestions:\n{}\n{}",
        qa_pairs(&pairs),
        render_context(&context)
    );
    let (reasoning, final_answer) =
        run.answer(retriever.answering_prompt(), "final", user_prompt)?;
    Ok(run.finish(reasoning, final_answer))
}
