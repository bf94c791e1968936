package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// DatabaseReference names a Database owned by another team.
type DatabaseReference struct {
	Name      string `json:"name"`
	Namespace string `json:"namespace"`
}

// AppSpec defines the desired state of App.
type AppSpec struct {
	Database DatabaseReference `json:"database"`
}

// App is the Schema for the apps API.
// +kubebuilder:object:root=true
type App struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec AppSpec `json:"spec,omitempty"`
}

// DatabaseSpec defines the desired state of Database.
type DatabaseSpec struct {
	Engine string `json:"engine"`
	DSN    string `json:"dsn"`
}

// Database is the Schema for the databases API.
// +kubebuilder:object:root=true
// +kubebuilder:resource:scope=Namespaced
type Database struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec DatabaseSpec `json:"spec,omitempty"`
}
