//! Prompt templates and slot substitution.
//!
//! Bodies for everything except `ending` are reproduced verbatim; rendered
//! prompts end at the final cue (`Answer:`, `Output:`, ...) with no trailing
//! whitespace.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template} is missing a binding for slot {slot}")]
    MissingSlot { template: TemplateId, slot: Slot },
    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Router,
    Decomposer,
    Refiner,
    Relevance,
    Generator,
    Ending,
    SingleQaGen,
    CompoundCompose,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::Router,
        TemplateId::Decomposer,
        TemplateId::Refiner,
        TemplateId::Relevance,
        TemplateId::Generator,
        TemplateId::Ending,
        TemplateId::SingleQaGen,
        TemplateId::CompoundCompose,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Router => "router",
            TemplateId::Decomposer => "decomposer",
            TemplateId::Refiner => "refiner",
            TemplateId::Relevance => "relevance",
            TemplateId::Generator => "generator",
            TemplateId::Ending => "ending",
            TemplateId::SingleQaGen => "single_qa_gen",
            TemplateId::CompoundCompose => "compound_compose",
        }
    }

    pub fn slots(self) -> &'static [Slot] {
        match self {
            TemplateId::Router | TemplateId::Decomposer => &[Slot::Query],
            TemplateId::Refiner | TemplateId::Ending => &[Slot::Query, Slot::Thought],
            TemplateId::Relevance => &[Slot::Query, Slot::Doc],
            TemplateId::Generator => &[Slot::Query, Slot::DocList],
            TemplateId::SingleQaGen => &[Slot::Title, Slot::Doc],
            TemplateId::CompoundCompose => &[Slot::SimpleQuestions],
        }
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::Router => ROUTER,
            TemplateId::Decomposer => DECOMPOSER,
            TemplateId::Refiner => REFINER,
            TemplateId::Relevance => RELEVANCE,
            TemplateId::Generator => GENERATOR,
            TemplateId::Ending => ENDING,
            TemplateId::SingleQaGen => SINGLE_QA_GEN,
            TemplateId::CompoundCompose => COMPOUND_COMPOSE,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Query,
    Thought,
    Doc,
    DocList,
    Title,
    SimpleQuestions,
}

impl Slot {
    pub fn placeholder(self) -> &'static str {
        match self {
            Slot::Query => "<your_query>",
            Slot::Thought => "<your_thought>",
            Slot::Doc => "<your_doc>",
            Slot::DocList => "<your_doc_list>",
            Slot::Title => "<your_title>",
            Slot::SimpleQuestions => "<simple_questions>",
        }
    }

    const ALL: [Slot; 6] = [
        Slot::Query,
        Slot::Thought,
        Slot::Doc,
        Slot::DocList,
        Slot::Title,
        Slot::SimpleQuestions,
    ];
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.placeholder())
    }
}

pub type Bindings = BTreeMap<Slot, String>;

/// Substitutes every slot of `id`'s body. Extra bindings are ignored.
pub fn render_prompt(id: TemplateId, bindings: &Bindings) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(id.body().len() + 256);
    for piece in pieces(id) {
        match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Slot(slot) => {
                let value = bindings
                    .get(&slot)
                    .ok_or(TemplateError::MissingSlot { template: id, slot })?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`render_prompt`]: recovers the slot values from a prompt
/// rendered with `id`, or `None` if the prompt was not produced by it.
pub fn extract_bindings(id: TemplateId, prompt: &str) -> Option<Bindings> {
    let parts = pieces(id);
    let mut bindings = Bindings::new();
    let mut rest = prompt;
    let mut i = 0;
    while i < parts.len() {
        match parts[i] {
            Piece::Literal(lit) => {
                rest = rest.strip_prefix(lit)?;
                i += 1;
            }
            Piece::Slot(slot) => {
                let value = match parts.get(i + 1) {
                    None => rest,
                    Some(Piece::Literal(next)) if i + 2 == parts.len() => rest.strip_suffix(next)?,
                    Some(Piece::Literal(next)) => &rest[..rest.find(next)?],
                    Some(Piece::Slot(_)) => return None,
                };
                bindings.insert(slot, value.to_string());
                rest = &rest[value.len()..];
                i += 1;
            }
        }
    }
    rest.is_empty().then_some(bindings)
}

/// Finds the template that produced `prompt`.
pub fn identify(prompt: &str) -> Option<(TemplateId, Bindings)> {
    TemplateId::ALL
        .into_iter()
        .find_map(|id| extract_bindings(id, prompt).map(|b| (id, b)))
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Literal(&'static str),
    Slot(Slot),
}

fn pieces(id: TemplateId) -> Vec<Piece> {
    let body = id.body();
    let mut out = Vec::new();
    let mut rest = body;
    loop {
        let next = Slot::ALL
            .iter()
            .filter_map(|s| rest.find(s.placeholder()).map(|pos| (pos, *s)))
            .min_by_key(|(pos, _)| *pos);
        match next {
            Some((pos, slot)) => {
                if pos > 0 {
                    out.push(Piece::Literal(&rest[..pos]));
                }
                out.push(Piece::Slot(slot));
                rest = &rest[pos + slot.placeholder().len()..];
            }
            None => {
                if !rest.is_empty() {
                    out.push(Piece::Literal(rest));
                }
                return out;
            }
        }
    }
}

/// `Doc1: ```...```` lines, numbered from 1. Empty input renders as "".
pub fn render_doc_list<S: AsRef<str>>(docs: &[S]) -> String {
    docs.iter()
        .enumerate()
        .map(|(i, d)| format!("Doc{}: ```{}```", i + 1, d.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a list produced by [`render_doc_list`].
pub fn parse_doc_list(rendered: &str) -> Vec<String> {
    let mut docs = Vec::new();
    let mut rest = rendered;
    let mut n = 1;
    while let Some(tail) = rest.strip_prefix(&format!("Doc{n}: ```")) {
        let marker = format!("```\nDoc{}: ```", n + 1);
        match tail.find(&marker) {
            Some(end) => {
                docs.push(tail[..end].to_string());
                rest = &tail[end + 4..];
            }
            None => {
                docs.push(tail.strip_suffix("```").unwrap_or(tail).to_string());
                break;
            }
        }
        n += 1;
    }
    docs
}

/// Renders solved (seed, answer) hops in the refiner's Thought format;
/// an empty history is `nothing`.
pub fn render_thought<Q: AsRef<str>, A: AsRef<str>>(steps: &[(Q, A)]) -> String {
    if steps.is_empty() {
        return "nothing".to_string();
    }
    steps
        .iter()
        .enumerate()
        .map(|(i, (q, a))| {
            format!(
                "**seed query-{n}**: {}\n**answer-{n}**: {}",
                q.as_ref(),
                a.as_ref(),
                n = i + 1
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a Thought block back into (seed, answer) pairs.
pub fn parse_thought(rendered: &str) -> Vec<(String, String)> {
    let mut steps = Vec::new();
    let mut seed: Option<String> = None;
    for line in rendered.lines() {
        if let Some(rest) = line.strip_prefix("**seed query-") {
            seed = rest.split_once("**: ").map(|(_, q)| q.to_string());
        } else if let Some(rest) = line.strip_prefix("**answer-") {
            if let (Some(q), Some((_, a))) = (seed.take(), rest.split_once("**: ")) {
                steps.push((q, a.to_string()));
            }
        }
    }
    steps
}

pub fn render_simple_questions<S: AsRef<str>>(questions: &[S]) -> String {
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| format!("Simple Question{}: ```{} ```", i + 1, q.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_simple_questions(rendered: &str) -> Vec<String> {
    rendered
        .lines()
        .filter_map(|l| {
            let (_, rest) = l.split_once(": ```")?;
            Some(rest.trim_end_matches('`').trim().to_string())
        })
        .collect()
}

const DECOMPOSER: &str = concat!(
    "You are an expert in English and can see through the essence of any English sentence.\n",
    "Your current task is to fully understand and analyze the problem I gave you, and decompose the problem to obtain several sub-problems that constitute the problem. You need to follow the following rules:\n",
    "\n",
    "Rule 1: Your output must be in json format, which contains only 2 keys. The first key is \"thought\" which represents your analysis and thinking process, and the second key is \"decomposition\" which represents the list of sub-problems after decomposition;\n",
    "Rule 2: The question I give you may be the simplest one, that is, it only consists of one question and cannot be decomposed into other sub-problems. In this case, you only need to return the original question to me;\n",
    "\n",
    "Now I will give you some examples to help you better understand and perform this task:\n",
    "Example-1:\n",
    "Query: Who was the first president of the United States?\n",
    "Answer: {\"thought\": \"This question is a very direct and simple question. There is no need to decompose it. It itself consists of only one sub-problem\", \"decomposition\": [\"Who was the first president of the United States?\"]}\n",
    "\n",
    "Example-2:\n",
    "Query: What honors has Liu Xiang won and when did he retire?\n",
    "Answer: {\"thought\": \"This question consists of two sub-questions. On the one hand, it asks about the honors Liu Xiang has won, and on the other hand, it asks about the time when Liu Xiang retired, so the original question can be decomposed into two sub-questions.\", \"decomposition\": [\"What honors has Liu Xiang won?\", \"When did Liu Xiang retire?\"]}\n",
    "\n",
    "Example-3:\n",
    "Query: What departments are there in Mayo Clinic, and which are the most famous ones?\n",
    "Answer: {\"thought\": \"This question consists of two sub-questions. On the one hand, it asks about the department composition of Mayo Clinic, and on the other hand, it asks about which are the most famous departments of Mayo Clinic, so the original question can be decomposed into two sub-questions.\", \"decomposition\": [\"What departments are there in Mayo Clinic?\", \"What are the most famous departments of Mayo Clinic?\"]}\n",
    "\n",
    "Now I will give you a question, please split it strictly according to the above rules and examples:\n",
    "Query: <your_query>\n",
    "Answer:",
);

const ROUTER: &str = concat!(
    "You are an expert who is proficient in English and can see through the essence of any English sentence.\n",
    "Your current task is to fully understand and analyze the question I gave you, and tell me whether it is a super simple common sense question, a simple single-step search question, a compound question, or a complex logical reasoning question. I will now give you the definitions of these types of questions:\n",
    "1. Straightforward question, which means that this question does not require external knowledge to be queried, and the information you know is enough to answer the question;\n",
    "2. Single-step question, which means that the information you know cannot answer this question, and you need to use some external knowledge, such as searching the Internet, asking experts, etc. to answer it, but you only need to use external knowledge once;\n",
    "3. Compound question, which means that this question is composed of multiple sub-questions, but these sub-questions are not related, or the correlation is relatively small, and no complex logical reasoning is required, but the information you know cannot answer the question, and it needs to be broken down into several sub-questions and then answered with the help of an external knowledge base;\n",
    "3. Complex question, which means that this question is composed of multiple sub-questions through complex logical nesting. There is a very strong logical relationship between these sub-questions. After decomposition, you still need to get the answer to a sub-question before you can continue to answer other sub-questions. That is, the answer to sub-question 1 is the prerequisite for sub-question 2.\n",
    "\n",
    "Your output needs to follow the following rules:\n",
    "\n",
    "Rule 1: You need to fully understand and analyze the given query and give your answer;\n",
    "\n",
    "Rule 2: You only need to give the type of question, and other content is prohibited.\n",
    "\n",
    "Now I will give you some examples to help you better understand and perform this task: \n",
    "\n",
    "Example-1: \n",
    "Query: Who is the first President of America? \n",
    "Answer: straightforward question \n",
    "\n",
    "Example-2: \n",
    "Query: Which company acquired Intime Department Store? \n",
    "Answer: single-step question \n",
    "\n",
    "Example-3: \n",
    "Query: What honors did Yao Ming win in the NBA? When did he retire from the NBA? \n",
    "Answer: compound question \n",
    "\n",
    "Example-4: \n",
    "Query: What city is the person who broadened the doctrine of philosophy of language from? \n",
    "Answer: complex question \n",
    "\n",
    "Example-5: \n",
    "Query: What is the scientific classification of conch shells, and what are the common uses of conch shells in various cultures? \n",
    "Answer: compound question \n",
    "\n",
    "Example-6: \n",
    "Query: In which country was Einstein born? \n",
    "Answer: straightforward question \n",
    "\n",
    "Example-7: \n",
    "Query: Who is Colin Kaepernick and what is his preferred nickname? \n",
    "Answer: complex question\n",
    "\n",
    "Example-8:\n",
    "Query: Where is Pan Jianwei's ancestral home?\n",
    "Answer: single-step question\n",
    "\n",
    "Now I will give you a query. Please fully understand it and output it according to the above example and strictly abide by the rules:\n",
    "Query: <your_query>\n",
    "Answer:",
);

const REFINER: &str = concat!(
    "You are a linguist, proficient in various literary works, and can easily see through the essence of any English sentence.\n",
    "I want to answer a question, which may be a simple question or a very complex question that requires multiple steps of reasoning to answer. For simple questions, I only need to search once in the search engine to get the answer; for complex questions, I need to solve them step by step. First, I need to refine the first seed question that needs to be answered in the complex question, and then I can further answer the next step of the complex question after answering it. What you need to do is to help me find the seed question in the question I gave.\n",
    "I will give you two aspects of content. The first is the complex problem mentioned above. The second is some solution steps I got after thinking and disassembling, including multiple seed questions refined from several steps of reasoning, and the answers to these seed questions. Given these two aspects of content, please help me refine the first seed question that needs to be answered in the complex problem. You need to abide by the following rules:\n",
    "Rule 1: If the problem given to you is a complex problem, then what you need to do is to refer to the thinking process I have completed and help me refine the seed question that needs to be answered next to this complex problem, that is, the first sub-question that must be answered first to answer this problem;\n",
    "Rule 2: If the problem given to you is a simple single-step problem, then you only need to output the original problem intact;\n",
    "Rule 3: You must not output any other irrelevant content, which is very important;\n",
    "Rule 4: The several parts of content I give you are \"Question\" for complex problems, \"Thought\" for completed thinking process, if its content is \"nothing\", it means that there is no completed thinking process, and \"Output\" for the content you need to output.\n",
    "\n",
    "Now I will give you some examples to help you better understand this task:\n",
    "Example-1:\n",
    "Question: Where was the director of film Eisenstein In Guanajuato born?\n",
    "Thought: ```nothing```\n",
    "Output: Who is the director of the film Eisenstein In Guanajuato?\n",
    "Example-2:\n",
    "Question: Who is the first President of America?\n",
    "Thought: ```nothing```\n",
    "Output: Who is the first President of America?\n",
    "Example-3:\n",
    "Question: Who is the father-in-law of Queen Hyojeong?\n",
    "Thought: \n",
    "```\n",
    "**seed query-1**: Who is the husband of Queen Hyojeong?\n",
    "**answer-1**: Heonjong of Joseon\n",
    "```\n",
    "Output: Who is the father of Heonjong of Joseon?\n",
    "\n",
    "Now I will give you a question. You should output according to the above rules and examples. Do not output any irrelevant content:\n",
    "Question: <your_query>\n",
    "Thought: \n",
    "```\n",
    "<your_thought>\n",
    "```\n",
    "Output:",
);

const RELEVANCE: &str = concat!(
    "You are a linguist proficient in various literary works.\n",
    "Your current task is to determine whether the document and the question I provide are related. I will give you a document and a question. This question is a real user's inquiry, and the document is content I have retrieved. The document may or may not be related to the question, so you need to make a judgment.\n",
    "You must follow these rules:\n",
    "Rule 1: If the doc is related to question, you must output true; if not, output false.\n",
    "Rule 2: A very important principle for determining relevance is that if the content of the document can be used to answer the question, whether it directly answers the question or merely serves as a reference to answer the question, it should be considered relevant.\n",
    "Rule 3: You can only output true or false, and nothing else.\n",
    "\n",
    "Now I will provide you with some examples to help you better understand and perform this task:\n",
    "Example-1:\n",
    "Question: Who was the first president of the United States?\n",
    "Doc: George Washington (February 22, 1732 – December 14, 1799) was the first president of the United States, serving from 1789 to 1797. As commander of the Continental Army, Washington led Patriot forces to victory in the American Revolutionary War against the British Empire. He has become commonly known as the \"Father of His Country\" for his role in American independence.\n",
    "Answer: true\n",
    "Example-2:\n",
    "Question: What honors has Liu Xiang received, and when did he retire?\n",
    "Doc: Liu Xiang (born July 13, 1983), born in Shanghai, with ancestral roots in Xihe Village, Dafeng, Yancheng, Jiangsu, is a Chinese male athlete. He won one Olympic gold medal, six World Championship medals, and three Asian Games gold medals. He is a two-time world champion and held the 110m hurdles world record for 23 months, which still stands as the Olympic record.\n",
    "Answer: true\n",
    "Example-3:\n",
    "Question: Who founded the Mayo Clinic?\n",
    "Doc: The Mayo Clinic is a medical institution located in Rochester, Minnesota, USA, established in 1864. It has branches in Jacksonville, Florida, and Scottsdale, Arizona, as well as smaller clinics and hospitals in Minnesota, Iowa, and Wisconsin. It is consistently ranked as the best hospital in the world by major authoritative reports.\n",
    "Answer: false\n",
    "\n",
    "Now, I will provide you with a question and a document. Please strictly follow the above rules and examples to analyze and output the answer:\n",
    "Question: <your_query>\n",
    "Doc: <your_doc>\n",
    "Answer:",
);

const GENERATOR: &str = concat!(
    "You are an expert who is proficient in various fields.\n",
    "Your current task is to answer the questions I give you based on the documents I give you. The questions are real questions from users, and the documents are some information related to the questions that you have retrieved. You must deliver your predictions in the most concise language. For example, if the answer is a person, just output their name; if the answer is a specific time, simply output the time point; if the answer is \"yes\" or \"no\" just output \"yes\" or \"no\".\n",
    "\n",
    "Now let me give you some examples to help you better understand this task: \n",
    "Example-1: \n",
    "Question: Which year did Liu Xiang retire?\n",
    "Doc1: ```Liu Xiang (born July 13, 1983), born in Shanghai, with ancestral roots in Xihe Village, Dafeng, Yancheng, Jiangsu, is a Chinese male athlete. He won one Olympic gold medal, six World Championship medals, and three Asian Games gold medals. He is a two-time world champion and held the 110m hurdles world record for 23 months, which still stands as the Olympic record.```\n",
    "Doc2: ```The Mayo Clinic is a medical institution located in Rochester, Minnesota, USA, established in 1864. It has branches in Jacksonville, Florida, and Scottsdale, Arizona, as well as smaller clinics and hospitals in Minnesota, Iowa, and Wisconsin. It is consistently ranked as the best hospital in the world by major authoritative reports.```\n",
    "Doc3: ```On April 7, In 2015, Liu announced his retirement in a statement posted to his Sina Weibo. He had not competed since the 2012 Olympic race.```\n",
    "Answer: 2015\n",
    "Example-2:\n",
    "Question: Did Nanjing University found in 1958?\n",
    "Doc1: ```Nanjing University, located in the ancient capital of China - Nanjing, is one of the oldest and most prestigious institutions of higher learning in the country. Founded in 1902 as Sanjiang Normal School, it has since evolved through various transformations to become the comprehensive university we know today. Renowned for its strong emphasis on academic research and teaching excellence, Nanjing University offers a wide range of disciplines including humanities, social sciences, natural sciences, engineering, and medicine.```\n",
    "Doc2: ```The University of Science and Technology of China (USTC), founded in 1958 in Beijing and later relocated to Hefei, Anhui Province, is a premier institution dedicated to fostering academic excellence and innovation. USTC is particularly renowned for its strong emphasis on science and technology education and research. As one of the key universities under the national Double First-Class University Plan, it has established itself as a leader in various scientific disciplines including physics, chemistry, life sciences, engineering, and information technology.```\n",
    "Doc3: ```Nanjing University stands out for its exceptional academic programs across various fields, with several disciplines earning national and international acclaim. The university's Astronomy department is particularly noteworthy, boasting a rich history and pioneering research in astrophysics, cosmology, and radio astronomy. Additionally, the Earth Sciences division, including Geology and related fields, is highly regarded for its comprehensive studies in paleontology, stratigraphy, and tectonic geology.```\n",
    "Doc4: ```The University of Science and Technology of China (USTC), located in Hefei, Anhui Province, is renowned for its strong emphasis on science and technology education. Established in 1958, USTC has been a pioneer in fostering innovation and cutting-edge research in various scientific fields. On the other hand, the University of Chinese Academy of Sciences (UCAS), with its main campus in Beijing, focuses on graduate education and high-level scientific research. UCAS, established much later in 2012, collaborates closely with the Chinese Academy of Sciences, offering students unique opportunities to engage in advanced research projects under the guidance of leading scientists.```\n",
    "\n",
    "Now I will give you a question and several documents that you need to fully understand before giving the answer, You only need to output the answer, do not output your thought process or other irrelevant information: \n",
    "Question: <your_query>\n",
    "<your_doc_list>\n",
    "Answer:",
);

const SINGLE_QA_GEN: &str = concat!(
    "You are a middle school English teacher.\n",
    "Your task is to refine a question based on the topic and document I give you, and find the answer to this question from the document. This task is equivalent to building an exam question based on the given document and around the topic.\n",
    "You need to follow the following rules:\n",
    "Rule 1: Your output must be in JSON format, containing two keys. The first one is \"Question\" which means the question you asked based on the given document around the given topic, and the second key is \"Answer\", which means the answer to the question that can be found directly from the document.\n",
    "Rule 2: The question you ask must be very simple, and the answer to this question must be answered in a few words, because you are giving exam questions to low-grade junior high school students, and their English level can only find the answer to the question in the document.\n",
    "Rule 3: The question you ask must be able to find the answer directly from the document, and the answer you give must be a simple entity containing only a few words, because this will be used as the correct answer to the exam question to calculate the student's score.\n",
    "\n",
    "I'll give you some examples now: \n",
    "Example1: \n",
    "Title: Liu Xiang \n",
    "Doc: Liu Xiang is a legendary Chinese hurdler, widely recognized as one of the greatest athletes in Chinese sports history. He was born on July 13, 1983, in Shanghai. Liu Xiang rose to international fame in 2004 when he won the gold medal in the 110-meter hurdles at the Athens Olympics, becoming the first Chinese male athlete to win an Olympic gold medal in track and field. His victory was historic as he equaled the world record of 12.91 seconds, set by Colin Jackson. \n",
    "Output: {\"Question\": \"Which year was Liu Xiang born?\", \"Answer\": \"1983\"} \n",
    "Example2: \n",
    "Title: Yao Ming \n",
    "Doc: Yao Ming, born on September 12, 1980, is a retired Chinese professional basketball player who played as a center. Standing at 7 feet 6 inches (2.29 meters) tall, he was one of the tallest players in the NBA during his career and became a cultural icon both in China and internationally. Drafted by the Houston Rockets as the first overall pick in the 2002 NBA draft, Yao spent his entire NBA career with the Rockets from 2002 to 2011.\n",
    "Output: {\"Question\": \"What sports did Yao Ming play?\", \"Answer\": \"basketball\"}\n",
    "\n",
    "Now you need to generate according to the above example, you only need to output one question, please do not output any other irrelevant content:\n",
    "Title: <your_title>\n",
    "Doc: <your_doc>\n",
    "Output:",
);

const COMPOUND_COMPOSE: &str = concat!(
    "I will give you several simple questions. Please combine them into a compound question. Since these questions are all about a certain entity, you need to follow the following rules:\n",
    "Rule 1: You need to fully understand the given questions and combine them perfectly;\n",
    "Rule 2: If the given questions cannot be combined, you only need to output \"no\";\n",
    "Rule 3: If they can be combined, the combined question must be a compound question, that is, this question must be about a certain entity and ask about several different aspects of the entity.\n",
    "\n",
    "Now let me give you some examples for your reference: \n",
    "Example1: \n",
    "Simple Question1: ```When was Arthur's Magazine first published? ``` \n",
    "Simple Question2: ```What is the main focus of Arthur's Magazine content? ``` \n",
    "Compound Question: ```When was Arthur's Magazine first published, and what is the main focus of its content? ``` \n",
    "Example2: \n",
    "Simple Question1: ```What frequency does KMBZ-FM broadcast on? ``` \n",
    "Simple Question2: ```What music did KMBZ-FM play in 1975? ``` \n",
    "Simple Question3: ```What was the share of KMBZ in the Kansas City Arbitron ratings report in February 2011? ``` \n",
    "Compound Question: ```What is the broadcasting frequency of KMBZ-FM, what type of music did it play in 1975, and what was its share in the Kansas City Arbitron ratings report in February 2011? ```\n",
    "\n",
    "Now I will give you these simple questions. You must strictly follow the above rules to output them. It is strictly forbidden to output any other irrelevant content:\n",
    "<simple_questions>\n",
    "Compound Question:",
);
// No ending-judgment prompt exists in the reference prompt set; this one
// mirrors the refiner's Thought block and asks for a bare yes/no.
const ENDING: &str = concat!(
    "You are an expert who is proficient in English and can see through the essence of any English sentence.\n",
    "Your current task is to judge whether the question I give you can already be answered. I will give you two aspects of content. The first is the question. The second is the thinking process I have completed, including multiple seed questions refined from several steps of reasoning, and the answers to these seed questions.\n",
    "You must follow these rules:\n",
    "Rule 1: If the completed thinking process is sufficient to answer the question, output yes; otherwise output no.\n",
    "Rule 2: You can only output yes or no, and nothing else.\n",
    "\n",
    "Now I will give you a question and the completed thinking process:\n",
    "Question: <your_query>\n",
    "Thought: \n",
    "```\n",
    "<your_thought>\n",
    "```\n",
    "Answer:",
);
